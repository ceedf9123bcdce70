// gievents: decode, evaluate and debug temporal GI event predictions.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gievents/gievents.hpp"

namespace fs = std::filesystem;
using namespace gievents;

namespace {

struct CommonOptions {
  std::string config;
};

RunConfig resolve_config(const CommonOptions& opts) {
  std::string path = opts.config;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnvVar); env && *env) path = env;
  }
  return path.empty() ? RunConfig{} : load_run_config(path);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  auto out = std::ofstream(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
}

std::vector<EventSet> read_all(const std::vector<std::string>& paths, const LabelSpace& space) {
  std::vector<EventSet> sets;
  for (const auto& p : paths) sets.push_back(read_events(p, space));
  return sets;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anatomy-guided temporal event decoding and evaluation for GI video"};
  app.require_subcommand(1);
  CommonOptions common;
  app.add_option("--config", common.config,
                 std::string("Run configuration JSON (default: $") + kConfigEnvVar + ")");

  // decode ------------------------------------------------------------------
  auto* decode_cmd = app.add_subcommand("decode", "Probability CSV -> event JSON");
  std::vector<std::string> decode_inputs;
  std::string decode_output, decode_out_dir, decode_video_id;
  bool decode_logits = false;
  std::optional<std::string> decoder_flag, composition_flag;
  std::optional<double> t_on, t_off, stay_prob, temperature;
  std::optional<std::size_t> min_len, vote_radius;
  bool no_gating = false;
  decode_cmd->add_option("-i,--input", decode_inputs, "Per-frame CSV file(s)")->required();
  decode_cmd->add_option("-o,--output", decode_output, "Event file (single input only)");
  decode_cmd->add_option("--out-dir", decode_out_dir, "Directory for <video>_pred.json files");
  decode_cmd->add_option("--video-id", decode_video_id, "Override the video id (single input)");
  decode_cmd->add_flag("--logits", decode_logits, "Input cells are logits, not probabilities");
  decode_cmd->add_option("--decoder", decoder_flag, "hysteresis | viterbi")
      ->check(CLI::IsMember({"hysteresis", "viterbi"}));
  decode_cmd->add_option("--composition", composition_flag, "gt_style | per_label")
      ->check(CLI::IsMember({"gt_style", "per_label"}));
  decode_cmd->add_option("--t-on", t_on, "Hysteresis turn-on threshold");
  decode_cmd->add_option("--t-off", t_off, "Hysteresis turn-off threshold");
  decode_cmd->add_option("--min-len", min_len, "Minimum ON run length in frames");
  decode_cmd->add_option("--stay-prob", stay_prob, "HMM self-transition probability");
  decode_cmd->add_option("--temperature", temperature, "Logit temperature");
  decode_cmd->add_option("--vote-radius", vote_radius, "Anatomy vote window radius");
  decode_cmd->add_flag("--no-gating", no_gating, "Disable anatomy-based pathology gating");

  // eval / debug ------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "Temporal mAP of predictions against GT");
  std::vector<std::string> eval_pred, eval_gt;
  std::vector<double> eval_iou;
  std::string eval_output;
  eval_cmd->add_option("-p,--pred", eval_pred, "Prediction event files")->required();
  eval_cmd->add_option("-g,--gt", eval_gt, "Ground-truth event files")->required();
  eval_cmd->add_option("--iou", eval_iou, "IoU thresholds (default 0.5 0.95)");
  eval_cmd->add_option("-o,--output", eval_output, "Write the JSON report here");

  auto* debug_cmd = app.add_subcommand("debug", "Per-video, per-label segment counts");
  std::vector<std::string> debug_pred, debug_gt;
  double debug_factor = 2.0;
  std::string debug_output;
  debug_cmd->add_option("-p,--pred", debug_pred, "Prediction event files");
  debug_cmd->add_option("-g,--gt", debug_gt, "Ground-truth event files");
  debug_cmd->add_option("--factor", debug_factor, "Flag rows whose counts differ by this factor")
      ->check(CLI::PositiveNumber);
  debug_cmd->add_option("-o,--output", debug_output, "Write the JSON table here");

  // weights -----------------------------------------------------------------
  auto* weights_cmd = app.add_subcommand("weights", "Clipped positive class weights");
  std::vector<std::string> weights_labels;
  double w_min = kDefaultWeightMin, w_max = kDefaultWeightMax;
  std::string weights_output;
  weights_cmd->add_option("-l,--labels", weights_labels, "Label matrix CSV file(s)")->required();
  weights_cmd->add_option("--w-min", w_min, "Lower clip bound");
  weights_cmd->add_option("--w-max", w_max, "Upper clip bound");
  weights_cmd->add_option("-o,--output", weights_output, "Write JSON here (default stdout)");

  // synth -------------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand("synth", "Write a seeded synthetic corpus");
  std::string synth_spec_path, synth_out_dir;
  std::optional<std::uint64_t> synth_seed;
  std::optional<std::size_t> synth_videos, synth_frames;
  std::optional<double> synth_noise, synth_rate;
  bool synth_banded = false;
  synth_cmd->add_option("--spec", synth_spec_path, "Synthetic corpus spec JSON");
  synth_cmd->add_option("--out-dir", synth_out_dir, "Output directory")->required();
  synth_cmd->add_option("--seed", synth_seed, "Random seed");
  synth_cmd->add_option("--videos", synth_videos, "Number of videos");
  synth_cmd->add_option("--frames", synth_frames, "Frames per video");
  synth_cmd->add_option("--noise", synth_noise, "Label noise level in [0, 1)");
  synth_cmd->add_option("--implausible-rate", synth_rate, "Implausible false-positive rate");
  synth_cmd->add_flag("--banded-prior", synth_banded,
                      "Use the built-in banded gating prior instead of the configured one");

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = resolve_config(common);
    const LabelSpace& space = cfg.space;

    if (*decode_cmd) {
      PipelineConfig pc = cfg.pipeline;
      if (decoder_flag) pc.decoder = parse_decoder(*decoder_flag);
      if (composition_flag) pc.composition = parse_composition(*composition_flag);
      if (t_on) pc.hysteresis.t_on = *t_on;
      if (t_off) pc.hysteresis.t_off = *t_off;
      if (min_len) pc.hysteresis.min_len = *min_len;
      if (stay_prob) pc.hmm.stay_prob.fill(*stay_prob);
      if (temperature) pc.hmm.temperature = *temperature;
      if (vote_radius) pc.vote.radius = *vote_radius;
      if (no_gating) pc.gating = false;
      pc.hysteresis.validate();
      pc.hmm.validate();

      if (decode_inputs.size() > 1 && (!decode_output.empty() || !decode_video_id.empty())) {
        throw Error("decode: --output and --video-id need a single --input; use --out-dir");
      }
      if (decode_output.empty() && decode_out_dir.empty()) {
        throw Error("decode: give --output or --out-dir");
      }
      for (const auto& in : decode_inputs) {
        const EventSet events =
            decode_logits ? decode(load_score_stream(in, space, decode_video_id), pc, space)
                          : decode(load_probability_stream(in, space, decode_video_id), pc, space);
        const fs::path out = decode_output.empty()
                                 ? fs::path(decode_out_dir) / (events.video_id + "_pred.json")
                                 : fs::path(decode_output);
        if (!decode_out_dir.empty()) fs::create_directories(decode_out_dir);
        write_events(out, events, space);
        std::cerr << "decode: " << in << " -> " << out.string() << " (" << events.events.size()
                  << " events)\n";
      }
    } else if (*eval_cmd) {
      EvalConfig ec = cfg.eval;
      if (!eval_iou.empty()) ec.iou_thresholds = eval_iou;
      const auto report = evaluate(read_all(eval_pred, space), read_all(eval_gt, space), ec, space);
      std::cout << format_report(report, space);
      if (!eval_output.empty()) write_text(eval_output, report_to_json(report, space).dump(2) + "\n");
    } else if (*debug_cmd) {
      const auto report =
          segment_count_report(read_all(debug_pred, space), read_all(debug_gt, space), debug_factor);
      std::cout << format_segment_counts(report, space);
      if (!debug_output.empty()) {
        write_text(debug_output, segment_counts_to_json(report, space).dump(2) + "\n");
      }
    } else if (*weights_cmd) {
      ClassCounts total{std::vector<std::uint64_t>(space.size(), 0),
                        std::vector<std::uint64_t>(space.size(), 0)};
      for (const auto& p : weights_labels) {
        const auto counts = ClassCounts::from_labels(load_label_matrix(p, space).labels);
        for (std::size_t c = 0; c < space.size(); ++c) {
          total.pos[c] += counts.pos[c];
          total.neg[c] += counts.neg[c];
        }
      }
      const auto weights = class_weights(total, w_min, w_max);
      write_text(weights_output.empty() ? "-" : weights_output,
                 class_weights_to_json(weights, total, space).dump(2) + "\n");
    } else if (*synth_cmd) {
      const GatingPrior prior = synth_banded ? banded_prior() : cfg.pipeline.prior;
      SynthCorpusSpec spec;
      if (!synth_spec_path.empty()) {
        auto in = std::ifstream(synth_spec_path);
        if (!in) throw Error("cannot open '" + synth_spec_path + "' for reading");
        json doc;
        try {
          doc = json::parse(in);
        } catch (const json::parse_error& e) {
          throw Error(synth_spec_path + ": malformed JSON: " + e.what());
        }
        spec = synth_spec_from_json(doc, space, prior);
      } else {
        spec.seed = cfg.seed;
        spec.video = SyntheticSpec::standard("", 2000, 0.0, 0.0, prior);
      }
      if (synth_seed) spec.seed = *synth_seed;
      if (synth_videos) spec.videos = *synth_videos;
      if (synth_frames) {
        auto plan = SyntheticSpec::standard("", *synth_frames, 0.0, 0.0, prior).anatomy_plan;
        spec.video.frame_count = *synth_frames;
        spec.video.anatomy_plan = std::move(plan);
      }
      if (synth_noise) spec.video.noise = *synth_noise;
      if (synth_rate) spec.video.implausible_rate = *synth_rate;

      fs::create_directories(synth_out_dir);
      for (std::size_t v = 0; v < spec.videos; ++v) {
        SyntheticSpec vs = spec.video;
        vs.video_id = spec.video_prefix + "_" + (v < 10 ? "00" : v < 100 ? "0" : "") +
                      std::to_string(v);
        const auto video = synthesize(vs, spec.seed + v);
        const fs::path dir(synth_out_dir);
        save_frame_csv(dir / (vs.video_id + "_probs.csv"), video.probs.probs, space);
        save_frame_csv(dir / (vs.video_id + "_labels.csv"), video.labels.labels, space);
        write_events(dir / (vs.video_id + "_gt.json"), video.ground_truth, space);
        std::cerr << "synth: " << vs.video_id << " (" << vs.frame_count << " frames, "
                  << video.ground_truth.events.size() << " GT events)\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
