#pragma once

// File formats: per-frame CSV matrices, per-video event JSON documents, the
// declarative run configuration, and JSON renderings of reports.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "gievents/evaluation.hpp"
#include "gievents/events.hpp"
#include "gievents/loss.hpp"
#include "gievents/pipeline.hpp"
#include "gievents/synth.hpp"

namespace gievents {

using json = nlohmann::ordered_json;

inline constexpr const char* kConfigEnvVar = "GIEVENTS_CONFIG";

// ---------------------------------------------------------------------------
// CSV matrices
// ---------------------------------------------------------------------------

enum class CellKind { probability, logit, binary };

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    cells.push_back(trim(line.substr(pos, comma == std::string_view::npos ? comma : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return cells;
}

inline bool parse_double(std::string_view cell, double& out) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return false;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc{} && ptr == cell.data() + cell.size();
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string located(const std::string& source, std::size_t line, const std::string& msg) {
  return source + ":" + std::to_string(line) + ": " + msg;
}

}  // namespace detail

/// Reads `frame,<class names...>` CSV into an N x 17 matrix in label-space
/// column order. Header columns may appear in any order; frames must run
/// 0, 1, 2, ... in row order.
inline Matrix<double> read_frame_csv(std::istream& in, const LabelSpace& space, CellKind kind,
                                     const std::string& source = "<csv>") {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(source + ": empty file, expected a header row");
  ++line_no;
  const auto header = detail::split_csv(line);
  if (header.empty() || header[0] != "frame") {
    throw Error(detail::located(source, 1, "first header column must be 'frame'"));
  }
  std::vector<std::size_t> column_class(header.size(), 0);
  std::vector<bool> seen(space.size(), false);
  for (std::size_t i = 1; i < header.size(); ++i) {
    const std::string name(header[i]);
    const auto cls = space.find(name);
    if (!cls) throw Error(detail::located(source, 1, "unknown column '" + name + "'"));
    if (seen[*cls]) throw Error(detail::located(source, 1, "duplicate column '" + name + "'"));
    seen[*cls] = true;
    column_class[i] = *cls;
  }
  for (std::size_t c = 0; c < space.size(); ++c) {
    if (!seen[c]) throw Error(detail::located(source, 1, "missing column '" + space.name(c) + "'"));
  }

  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != header.size()) {
      throw Error(detail::located(source, line_no,
                                  "expected " + std::to_string(header.size()) + " cells, got " +
                                      std::to_string(cells.size())));
    }
    double frame = 0.0;
    if (!detail::parse_double(cells[0], frame) || frame != static_cast<double>(rows)) {
      throw Error(detail::located(source, line_no,
                                  "frame '" + std::string(cells[0]) + "' out of sequence (expected " +
                                      std::to_string(rows) + ")"));
    }
    values.resize(values.size() + space.size());
    double* row = values.data() + rows * space.size();
    for (std::size_t i = 1; i < cells.size(); ++i) {
      const std::string& col = space.name(column_class[i]);
      double v = 0.0;
      if (!detail::parse_double(cells[i], v)) {
        throw Error(detail::located(source, line_no,
                                    "column '" + col + "': non-numeric value '" +
                                        std::string(cells[i]) + "'"));
      }
      if (!std::isfinite(v)) {
        throw Error(detail::located(source, line_no, "column '" + col + "': non-finite value"));
      }
      if (kind == CellKind::probability && (v < 0.0 || v > 1.0)) {
        throw Error(detail::located(source, line_no,
                                    "row " + std::to_string(rows) + ", column '" + col +
                                        "': value " + std::string(cells[i]) +
                                        " outside [0, 1]"));
      }
      if (kind == CellKind::binary && v != 0.0 && v != 1.0) {
        throw Error(detail::located(source, line_no,
                                    "column '" + col + "': label must be 0 or 1, got " +
                                        std::string(cells[i])));
      }
      row[column_class[i]] = v;
    }
    ++rows;
  }
  Matrix<double> m(rows, space.size());
  m.data() = std::move(values);
  return m;
}

template <typename T>
void write_frame_csv(std::ostream& out, const Matrix<T>& m, const LabelSpace& space) {
  if (m.rows() > 0 && m.cols() != space.size()) throw Error("write_frame_csv: width mismatch");
  out << "frame";
  for (const auto& n : space.names()) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out << r;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if constexpr (std::is_floating_point_v<T>) {
        out << ',' << detail::format_double(m(r, c));
      } else {
        out << ',' << static_cast<int>(m(r, c));
      }
    }
    out << '\n';
  }
}

namespace detail {

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace detail

/// Video id implied by a file name: the stem, minus a trailing _probs,
/// _logits, _labels, _gt or _pred tag.
inline std::string video_id_from_path(const std::filesystem::path& path) {
  std::string stem = path.stem().string();
  for (std::string_view tag : {"_probs", "_logits", "_labels", "_gt", "_pred"}) {
    if (stem.size() > tag.size() && stem.ends_with(tag)) {
      stem.resize(stem.size() - tag.size());
      break;
    }
  }
  return stem;
}

inline ProbabilityStream load_probability_stream(const std::filesystem::path& path,
                                                 const LabelSpace& space,
                                                 std::string video_id = {}) {
  auto in = detail::open_in(path);
  ProbabilityStream s{video_id.empty() ? video_id_from_path(path) : std::move(video_id),
                      read_frame_csv(in, space, CellKind::probability, path.string())};
  require_valid(s, space);
  return s;
}

inline ScoreStream load_score_stream(const std::filesystem::path& path, const LabelSpace& space,
                                     std::string video_id = {}) {
  auto in = detail::open_in(path);
  return {video_id.empty() ? video_id_from_path(path) : std::move(video_id),
          read_frame_csv(in, space, CellKind::logit, path.string())};
}

inline LabelMatrix load_label_matrix(const std::filesystem::path& path, const LabelSpace& space,
                                     std::string video_id = {}) {
  auto in = detail::open_in(path);
  const auto m = read_frame_csv(in, space, CellKind::binary, path.string());
  LabelMatrix out{video_id.empty() ? video_id_from_path(path) : std::move(video_id),
                  Matrix<std::uint8_t>(m.rows(), m.cols())};
  for (std::size_t i = 0; i < m.data().size(); ++i) {
    out.labels.data()[i] = m.data()[i] != 0.0 ? 1 : 0;
  }
  return out;
}

template <typename T>
void save_frame_csv(const std::filesystem::path& path, const Matrix<T>& m,
                    const LabelSpace& space) {
  auto out = detail::open_out(path);
  write_frame_csv(out, m, space);
}

// ---------------------------------------------------------------------------
// Event documents
// ---------------------------------------------------------------------------

inline json events_to_json(const EventSet& set, const LabelSpace& space) {
  json doc;
  doc["video_id"] = set.video_id;
  doc["frame_count"] = set.frame_count;
  json events = json::array();
  for (const auto& e : set.events) {
    json ev;
    ev["label"] = space.name(e.label);
    ev["start_frame"] = e.start_frame;
    ev["end_frame"] = e.end_frame;
    if (e.score) ev["score"] = *e.score;
    events.push_back(std::move(ev));
  }
  doc["events"] = std::move(events);
  return doc;
}

inline std::string serialize_events(const EventSet& set, const LabelSpace& space) {
  return events_to_json(set, space).dump(2) + "\n";
}

namespace detail {

inline std::size_t get_index(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw Error(where + ": missing '" + key + "'");
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned()) {
    throw Error(where + ": '" + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace detail

inline EventSet events_from_json(const json& doc, const LabelSpace& space,
                                 const std::string& source = "<events>") {
  if (!doc.is_object()) throw Error(source + ": event document must be a JSON object");
  EventSet set;
  if (!doc.contains("video_id") || !doc.at("video_id").is_string()) {
    throw Error(source + ": missing string 'video_id'");
  }
  set.video_id = doc.at("video_id").get<std::string>();
  set.frame_count = detail::get_index(doc, "frame_count", source);
  if (!doc.contains("events") || !doc.at("events").is_array()) {
    throw Error(source + ": missing array 'events'");
  }
  const auto& events = doc.at("events");
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& ev = events[i];
    const std::string where = source + ": event " + std::to_string(i);
    if (!ev.is_object()) throw Error(where + ": not an object");
    if (!ev.contains("label") || !ev.at("label").is_string()) {
      throw Error(where + ": missing string 'label'");
    }
    const auto cls = space.find(ev.at("label").get<std::string>());
    if (!cls) throw Error(where + ": unknown label '" + ev.at("label").get<std::string>() + "'");
    Event e{*cls, detail::get_index(ev, "start_frame", where),
            detail::get_index(ev, "end_frame", where), std::nullopt};
    if (ev.contains("score") && !ev.at("score").is_null()) {
      if (!ev.at("score").is_number()) throw Error(where + ": 'score' must be a number");
      e.score = ev.at("score").get<double>();
    }
    set.events.push_back(e);
  }
  if (auto msg = check_event_set(set); !msg.empty()) throw Error(source + ": " + msg);
  return set;
}

inline EventSet parse_events(std::string_view text, const LabelSpace& space,
                             const std::string& source = "<events>") {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(source + ": malformed JSON: " + e.what());
  }
  return events_from_json(doc, space, source);
}

inline EventSet read_events(const std::filesystem::path& path, const LabelSpace& space) {
  auto in = detail::open_in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_events(buf.str(), space, path.string());
}

inline void write_events(const std::filesystem::path& path, const EventSet& set,
                         const LabelSpace& space) {
  require_valid(set);
  auto out = detail::open_out(path);
  out << serialize_events(set, space);
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

namespace detail {

inline void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> known,
                                const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || key == k;
    if (!ok) throw Error(where + ": unknown key '" + key + "'");
  }
}

inline std::vector<std::string> string_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw Error(where + ": expected an array of strings");
  std::vector<std::string> out;
  for (const auto& s : v) {
    if (!s.is_string()) throw Error(where + ": expected an array of strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

inline double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw Error(where + ": expected a number");
  return v.get<double>();
}

}  // namespace detail

/// `{"anatomy": [5 names], "pathology": [12 names]}`
inline LabelSpace label_space_from_json(const json& doc) {
  if (!doc.is_object()) throw Error("label space: expected an object");
  detail::reject_unknown_keys(doc, {"anatomy", "pathology"}, "label space");
  if (!doc.contains("anatomy") || !doc.contains("pathology")) {
    throw Error("label space: needs 'anatomy' and 'pathology' lists");
  }
  return LabelSpace(detail::string_list(doc.at("anatomy"), "label space anatomy"),
                    detail::string_list(doc.at("pathology"), "label space pathology"));
}

inline json label_space_to_json(const LabelSpace& space) {
  return json{{"anatomy", space.anatomy_names()}, {"pathology", space.pathology_names()}};
}

/// `{"<pathology>": ["<anatomy>", ...], ...}`. Pathologies not listed keep
/// every anatomy allowed.
inline GatingPrior gating_prior_from_json(const json& doc, const LabelSpace& space) {
  if (!doc.is_object()) throw Error("gating prior: expected an object");
  GatingPrior prior = GatingPrior::permissive();
  for (const auto& [name, list] : doc.items()) {
    const auto cls = space.find(name);
    if (!cls || !is_pathology(*cls)) {
      throw Error("gating prior: '" + name + "' is not a pathology class");
    }
    GatingPrior::AnatomySet allowed;
    for (const auto& a : detail::string_list(list, "gating prior '" + name + "'")) {
      const auto ac = space.find(a);
      if (!ac || !is_anatomy(*ac)) {
        throw Error("gating prior '" + name + "': '" + a + "' is not an anatomy class");
      }
      allowed.set(*ac);
    }
    prior.set_allowed(*cls, allowed);
  }
  return prior;
}

inline json gating_prior_to_json(const GatingPrior& prior, const LabelSpace& space) {
  json doc = json::object();
  for (std::size_t m = kNumAnatomy; m < kNumClasses; ++m) {
    json list = json::array();
    for (std::size_t a = 0; a < kNumAnatomy; ++a) {
      if (prior.allows(m, a)) list.push_back(space.name(a));
    }
    doc[space.name(m)] = std::move(list);
  }
  return doc;
}

struct RunConfig {
  LabelSpace space = LabelSpace::default_space();
  PipelineConfig pipeline;
  EvalConfig eval;
  std::uint64_t seed = 0;
};

/// Relative `label_space_file` paths resolve against `base_dir`.
inline RunConfig run_config_from_json(const json& doc,
                                      const std::filesystem::path& base_dir = {}) {
  if (!doc.is_object()) throw Error("config: expected a JSON object");
  detail::reject_unknown_keys(doc,
                              {"label_space", "label_space_file", "gating", "vote_radius",
                               "decoder", "eval", "composition", "seed"},
                              "config");
  RunConfig cfg;
  if (doc.contains("label_space") && doc.contains("label_space_file")) {
    throw Error("config: give either 'label_space' or 'label_space_file', not both");
  }
  if (doc.contains("label_space")) cfg.space = label_space_from_json(doc.at("label_space"));
  if (doc.contains("label_space_file")) {
    std::filesystem::path p = doc.at("label_space_file").get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    auto in = detail::open_in(p);
    try {
      cfg.space = label_space_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
      throw Error(p.string() + ": malformed JSON: " + e.what());
    }
  }

  auto& pc = cfg.pipeline;
  if (doc.contains("gating")) {
    const auto& g = doc.at("gating");
    detail::reject_unknown_keys(g, {"enabled", "allowed"}, "config gating");
    if (g.contains("enabled")) pc.gating = g.at("enabled").get<bool>();
    if (g.contains("allowed")) pc.prior = gating_prior_from_json(g.at("allowed"), cfg.space);
  }
  if (doc.contains("vote_radius")) {
    pc.vote.radius = detail::get_index(doc, "vote_radius", "config");
  }
  if (doc.contains("decoder")) {
    const auto& d = doc.at("decoder");
    detail::reject_unknown_keys(
        d, {"type", "t_on", "t_off", "min_len", "stay_prob", "temperature"}, "config decoder");
    if (d.contains("type")) pc.decoder = parse_decoder(d.at("type").get<std::string>());
    if (d.contains("t_on")) pc.hysteresis.t_on = detail::number(d.at("t_on"), "decoder t_on");
    if (d.contains("t_off")) pc.hysteresis.t_off = detail::number(d.at("t_off"), "decoder t_off");
    if (d.contains("min_len")) pc.hysteresis.min_len = detail::get_index(d, "min_len", "decoder");
    if (d.contains("temperature")) {
      pc.hmm.temperature = detail::number(d.at("temperature"), "decoder temperature");
    }
    if (d.contains("stay_prob")) {
      const auto& s = d.at("stay_prob");
      if (s.is_number()) {
        pc.hmm.stay_prob.fill(s.get<double>());
      } else if (s.is_object()) {
        for (const auto& [name, v] : s.items()) {
          pc.hmm.stay_prob[cfg.space.index(name)] = detail::number(v, "stay_prob '" + name + "'");
        }
      } else {
        throw Error("config decoder: 'stay_prob' must be a number or an object");
      }
    }
  }
  if (doc.contains("eval")) {
    const auto& e = doc.at("eval");
    detail::reject_unknown_keys(e, {"iou_thresholds"}, "config eval");
    if (e.contains("iou_thresholds")) {
      cfg.eval.iou_thresholds.clear();
      for (const auto& t : e.at("iou_thresholds")) {
        cfg.eval.iou_thresholds.push_back(detail::number(t, "eval iou_thresholds"));
      }
    }
  }
  if (doc.contains("composition")) {
    pc.composition = parse_composition(doc.at("composition").get<std::string>());
  }
  if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();

  pc.hysteresis.validate();
  pc.hmm.validate();
  cfg.eval.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": malformed JSON: " + e.what());
  }
  try {
    return run_config_from_json(doc, path.parent_path());
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Synthetic corpus spec
// ---------------------------------------------------------------------------

struct SynthCorpusSpec {
  std::size_t videos = 1;
  std::string video_prefix = "synth";
  SyntheticSpec video;  // video_id is overwritten per video
  std::uint64_t seed = 0;
};

/// Keys: videos, video_prefix, frame_count, anatomy_plan ([{anatomy, length}]),
/// burst_rate, burst_len ([min, max]), noise, implausible_rate, seed. Without
/// an anatomy plan the frames split evenly over the five anatomies.
inline SynthCorpusSpec synth_spec_from_json(const json& doc, const LabelSpace& space,
                                            const GatingPrior& prior) {
  if (!doc.is_object()) throw Error("synth spec: expected a JSON object");
  detail::reject_unknown_keys(doc,
                              {"videos", "video_prefix", "frame_count", "anatomy_plan",
                               "burst_rate", "burst_len", "noise", "implausible_rate", "seed"},
                              "synth spec");
  SynthCorpusSpec spec;
  if (doc.contains("videos")) spec.videos = detail::get_index(doc, "videos", "synth spec");
  if (doc.contains("video_prefix")) spec.video_prefix = doc.at("video_prefix").get<std::string>();
  if (doc.contains("seed")) spec.seed = doc.at("seed").get<std::uint64_t>();
  const std::size_t frames =
      doc.contains("frame_count") ? detail::get_index(doc, "frame_count", "synth spec") : 2000;
  spec.video = SyntheticSpec::standard("", frames, 0.0, 0.0, prior);
  if (doc.contains("anatomy_plan")) {
    spec.video.anatomy_plan.clear();
    for (const auto& seg : doc.at("anatomy_plan")) {
      const auto cls = space.index(seg.at("anatomy").get<std::string>());
      if (!is_anatomy(cls)) throw Error("synth spec: anatomy_plan entry is not an anatomy");
      spec.video.anatomy_plan.push_back({cls, detail::get_index(seg, "length", "anatomy_plan")});
    }
  }
  if (doc.contains("burst_rate")) spec.video.burst_rate = detail::number(doc.at("burst_rate"), "burst_rate");
  if (doc.contains("burst_len")) {
    const auto& b = doc.at("burst_len");
    if (!b.is_array() || b.size() != 2) throw Error("synth spec: 'burst_len' must be [min, max]");
    spec.video.burst_min = b[0].get<std::size_t>();
    spec.video.burst_max = b[1].get<std::size_t>();
  }
  if (doc.contains("noise")) spec.video.noise = detail::number(doc.at("noise"), "noise");
  if (doc.contains("implausible_rate")) {
    spec.video.implausible_rate = detail::number(doc.at("implausible_rate"), "implausible_rate");
  }
  spec.video.validate();
  return spec;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json segment_counts_to_json(const SegmentCountReport& r, const LabelSpace& space) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"video_id", row.video_id},
                    {"label", space.name(row.label)},
                    {"predicted", row.predicted},
                    {"ground_truth", row.ground_truth},
                    {"flagged", row.flagged}});
  }
  json totals = json::object();
  for (const auto& [vid, t] : r.video_totals) {
    totals[vid] = {{"predicted", t.first}, {"ground_truth", t.second}};
  }
  return {{"flag_factor", r.flag_factor},
          {"rows", std::move(rows)},
          {"video_totals", std::move(totals)},
          {"total_predicted", r.total_predicted},
          {"total_ground_truth", r.total_ground_truth}};
}

inline json report_to_json(const EvalReport& r, const LabelSpace& space) {
  auto by_threshold = [&](const std::vector<double>& v) {
    json o = json::object();
    for (std::size_t k = 0; k < r.thresholds.size(); ++k) {
      o[detail::format_double(r.thresholds[k])] = v[k];
    }
    return o;
  };
  json per_class = json::object();
  for (const auto& [cls, v] : r.per_class_ap) per_class[space.name(cls)] = by_threshold(v);
  json per_video = json::object();
  for (const auto& [vid, v] : r.per_video_map) per_video[vid] = by_threshold(v);
  return {{"iou_thresholds", r.thresholds},
          {"overall_map", by_threshold(r.overall_map)},
          {"per_video_map", std::move(per_video)},
          {"per_class_ap", std::move(per_class)},
          {"diagnostics", segment_counts_to_json(r.diagnostics, space)}};
}

inline json class_weights_to_json(const ClassWeights& w, const ClassCounts& counts,
                                  const LabelSpace& space) {
  json classes = json::object();
  for (std::size_t c = 0; c < w.weights.size(); ++c) {
    classes[space.name(c)] = {
        {"pos", counts.pos[c]}, {"neg", counts.neg[c]}, {"weight", w.weights[c]}};
  }
  return {{"w_min", w.w_min}, {"w_max", w.w_max}, {"classes", std::move(classes)}};
}

}  // namespace gievents
