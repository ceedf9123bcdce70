#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gievents {

inline constexpr std::size_t kNumAnatomy = 5;
inline constexpr std::size_t kNumPathology = 12;
inline constexpr std::size_t kNumClasses = kNumAnatomy + kNumPathology;

/// Error raised for malformed inputs anywhere in the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr bool is_anatomy(std::size_t cls) { return cls < kNumAnatomy; }
inline constexpr bool is_pathology(std::size_t cls) {
  return cls >= kNumAnatomy && cls < kNumClasses;
}

/// Dense row-major frames x classes matrix.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

/// The 17-class label universe: anatomy classes occupy indices [0, 4] and
/// pathology classes [5, 16], each in list order.
class LabelSpace {
 public:
  LabelSpace(std::vector<std::string> anatomy, std::vector<std::string> pathology)
      : anatomy_(std::move(anatomy)), pathology_(std::move(pathology)) {
    if (anatomy_.size() != kNumAnatomy) {
      throw Error("label space needs " + std::to_string(kNumAnatomy) +
                  " anatomy names, got " + std::to_string(anatomy_.size()));
    }
    if (pathology_.size() != kNumPathology) {
      throw Error("label space needs " + std::to_string(kNumPathology) +
                  " pathology names, got " + std::to_string(pathology_.size()));
    }
    std::set<std::string> seen;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const auto& n = name(c);
      if (n.empty()) throw Error("empty class name at index " + std::to_string(c));
      if (!seen.insert(n).second) throw Error("duplicate class name '" + n + "'");
    }
  }

  /// Mouth-to-colon anatomy order with placeholder pathology names path_01..path_12.
  static LabelSpace default_space() {
    std::vector<std::string> path;
    for (std::size_t i = 1; i <= kNumPathology; ++i) {
      path.push_back((i < 10 ? "path_0" : "path_") + std::to_string(i));
    }
    return LabelSpace({"mouth", "esophagus", "stomach", "small_intestine", "colon"},
                      std::move(path));
  }

  std::size_t size() const { return kNumClasses; }
  const std::vector<std::string>& anatomy_names() const { return anatomy_; }
  const std::vector<std::string>& pathology_names() const { return pathology_; }

  const std::string& name(std::size_t cls) const {
    if (cls >= kNumClasses) throw Error("class index out of range: " + std::to_string(cls));
    return cls < kNumAnatomy ? anatomy_[cls] : pathology_[cls - kNumAnatomy];
  }

  std::optional<std::size_t> find(const std::string& n) const {
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (name(c) == n) return c;
    }
    return std::nullopt;
  }

  std::size_t index(const std::string& n) const {
    if (auto c = find(n)) return *c;
    throw Error("unknown class name '" + n + "'");
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out(anatomy_);
    out.insert(out.end(), pathology_.begin(), pathology_.end());
    return out;
  }

  friend bool operator==(const LabelSpace&, const LabelSpace&) = default;

 private:
  std::vector<std::string> anatomy_;
  std::vector<std::string> pathology_;
};

/// Raw per-frame logits z.
struct ScoreStream {
  std::string video_id;
  Matrix<double> scores;

  std::size_t frames() const { return scores.rows(); }
};

/// Per-frame class probabilities p = sigmoid(z).
struct ProbabilityStream {
  std::string video_id;
  Matrix<double> probs;

  std::size_t frames() const { return probs.rows(); }
};

/// Binary ground-truth indicators y.
struct LabelMatrix {
  std::string video_id;
  Matrix<std::uint8_t> labels;

  std::size_t frames() const { return labels.rows(); }
};

struct Violation {
  std::optional<std::size_t> row;
  std::optional<std::size_t> col;
  std::string message;
};

struct ValidationResult {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  explicit operator bool() const { return ok(); }

  std::string summary() const {
    std::ostringstream os;
    for (const auto& v : violations) {
      if (v.row) os << "row " << *v.row;
      if (v.col) os << (v.row ? ", " : "") << "col " << *v.col;
      if (v.row || v.col) os << ": ";
      os << v.message << '\n';
    }
    return os.str();
  }
};

/// Checks a ragged row set, the shape loaders see before a Matrix exists.
inline ValidationResult validate_rows(const std::vector<std::vector<double>>& rows,
                                      const LabelSpace& space,
                                      bool require_unit_interval = true) {
  ValidationResult result;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != space.size()) {
      result.violations.push_back({r, std::nullopt,
                                   "row width " + std::to_string(rows[r].size()) +
                                       " ≠ " + std::to_string(space.size())});
      continue;
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const double v = rows[r][c];
      if (!std::isfinite(v)) {
        result.violations.push_back({r, c, "non-finite value"});
      } else if (require_unit_interval && (v < 0.0 || v > 1.0)) {
        std::ostringstream os;
        os << "probability " << v << " outside [0, 1]";
        result.violations.push_back({r, c, os.str()});
      }
    }
  }
  return result;
}

inline ValidationResult validate_stream(const ProbabilityStream& stream,
                                        const LabelSpace& space) {
  if (stream.probs.cols() != space.size() && stream.probs.rows() > 0) {
    ValidationResult result;
    result.violations.push_back({std::nullopt, std::nullopt,
                                 "row width " + std::to_string(stream.probs.cols()) +
                                     " ≠ " + std::to_string(space.size())});
    return result;
  }
  std::vector<std::vector<double>> rows(stream.probs.rows());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    rows[r].assign(stream.probs.data().begin() + r * stream.probs.cols(),
                   stream.probs.data().begin() + (r + 1) * stream.probs.cols());
  }
  return validate_rows(rows, space);
}

inline void require_valid(const ProbabilityStream& stream, const LabelSpace& space) {
  if (auto v = validate_stream(stream, space); !v) {
    throw Error("invalid probability stream '" + stream.video_id + "':\n" + v.summary());
  }
}

}  // namespace gievents
