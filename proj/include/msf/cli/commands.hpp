#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "msf/cli/config.hpp"
#include "msf/cli/selfcheck.hpp"
#include "msf/eval/experiment.hpp"
#include "msf/io/checkpoint.hpp"
#include "msf/io/feature_file.hpp"
#include "msf/io/manifests.hpp"
#include "msf/io/synthetic.hpp"

namespace msf {

enum class EvalMode { gzsl, zsl };

inline EvalMode parse_eval_mode(std::string_view s) {
  if (s == "gzsl") return EvalMode::gzsl;
  if (s == "zsl") return EvalMode::zsl;
  throw ConfigError("--mode must be zsl or gzsl, got '" + std::string(s) + "'");
}

struct LoadedData {
  Dataset dataset;
  SplitSpec split;
};

inline std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Reads the skeleton features, the three semantic channels and the split. The
// channel files must list the same class ids in the same order.
inline LoadedData load_data(const RunConfig& cfg) {
  cfg.require_inputs();
  LoadedData out;
  FeatureData skeleton = read_features(cfg.data.skeleton);
  if (!skeleton.labels) throw FormatError(cfg.data.skeleton.string() + ": skeleton features need labels");
  out.dataset.skeleton = std::move(skeleton.values);
  out.dataset.labels = std::move(*skeleton.labels);

  auto& sem = out.dataset.semantics;
  auto read_channel = [&](const std::filesystem::path& p) {
    FeatureData d = read_features(p);
    if (!d.labels) throw FormatError(p.string() + ": semantic features need class-id labels");
    if (sem.class_ids.empty()) {
      sem.class_ids = *d.labels;
    } else if (*d.labels != sem.class_ids) {
      throw FormatError(p.string() + ": class ids differ from the other semantic channels");
    }
    return std::move(d.values);
  };
  sem.label = read_channel(cfg.data.label);
  sem.action_description = read_channel(cfg.data.action);
  sem.motion_description = read_channel(cfg.data.motion);
  sem.validate();
  out.split = read_split(cfg.data.split);
  if (out.split.name.empty()) out.split.name = cfg.data.split.stem().string();
  return out;
}

struct SynthReport {
  std::vector<std::filesystem::path> files;
  SplitSpec split;
};

inline SynthReport cmd_synth(const RunConfig& cfg, std::ostream& log) {
  const SyntheticDataset ds = generate_synthetic(cfg.synth);
  SynthReport rep;
  rep.split = make_synthetic_split(cfg.synth.n_classes, cfg.synth_unseen, cfg.synth.seed);
  const auto& ids = ds.semantics.class_ids;
  write_features(cfg.data.skeleton, ds.skeleton, &ds.labels, cfg.synth_dtype);
  write_features(cfg.data.label, *ds.semantics.label, &ids, cfg.synth_dtype);
  write_features(cfg.data.action, *ds.semantics.action_description, &ids, cfg.synth_dtype);
  write_features(cfg.data.motion, *ds.semantics.motion_description, &ids, cfg.synth_dtype);
  write_split(cfg.data.split, rep.split);
  ClassNames names;
  for (ClassId id : ids) names[id] = "synthetic_class_" + std::to_string(id);
  write_class_names(cfg.data.class_names, names);
  rep.files = {cfg.data.skeleton, cfg.data.label, cfg.data.action, cfg.data.motion, cfg.data.split, cfg.data.class_names};
  log << "synth: " << cfg.synth.n_classes << " classes x " << cfg.synth.samples_per_class << " samples, skel_dim="
      << cfg.synth.skel_dim << " text_dim=" << cfg.synth.text_dim << " rho=" << cfg.synth.correlation
      << " split=" << rep.split.name << "\n";
  for (const auto& f : rep.files) log << "  wrote " << f.string() << "\n";
  return rep;
}

inline std::string format_loss_trace(const std::vector<EpochLoss>& inner, const std::vector<EpochLoss>& final_run) {
  std::string out =
      "stage,epoch,total,skeleton_recon,skeleton_kl,skeleton_align,text_recon,text_kl,text_align\n";
  auto emit = [&](const char* stage, const std::vector<EpochLoss>& trace) {
    for (const auto& e : trace) {
      out += std::string(stage) + "," + std::to_string(e.epoch) + "," + fmt_g(e.total) + "," +
             fmt_g(e.skeleton.recon) + "," + fmt_g(e.skeleton.kl) + "," + fmt_g(e.skeleton.align) + "," +
             fmt_g(e.text.recon) + "," + fmt_g(e.text.kl) + "," + fmt_g(e.text.align) + "\n";
    }
  };
  emit("inner", inner);
  emit("final", final_run);
  return out;
}

struct TrainReport {
  std::size_t fused_dim = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::filesystem::path checkpoint;
  std::filesystem::path loss_trace;
};

inline TrainReport cmd_train(const RunConfig& cfg, std::ostream& log) {
  const LoadedData data = load_data(cfg);
  const ExperimentConfig& e = cfg.experiment;
  log << "train: split=" << data.split.name << " seen=" << data.split.seen.size()
      << " unseen=" << data.split.unseen.size() << " semantic_mode=" << to_string(e.semantic_mode)
      << " fused_dim=" << fused_dim(data.dataset.semantics, e.semantic_mode) << "\n";
  const TrainedPipeline trained = train_pipeline(data.dataset, data.split, e);

  TrainReport rep;
  rep.fused_dim = trained.fused_dim;
  rep.checkpoint = cfg.checkpoint_path();
  rep.loss_trace = cfg.out_dir / "loss_trace.csv";
  if (!trained.final_alignment_trace.empty()) {
    rep.initial_loss = trained.final_alignment_trace.front().total;
    rep.final_loss = trained.final_alignment_trace.back().total;
  }
  Header header = {
      {"name", cfg.name},
      {"seed", std::to_string(e.seed)},
      {"epoch", std::to_string(e.alignment.epochs)},
      {"semantic_mode", std::string(to_string(e.semantic_mode))},
      {"fused_dim", std::to_string(trained.fused_dim)},
      {"split", data.split.name},
      {"seen_test_fraction", fmt_g(e.seen_test_fraction)},
      {"holdout_fraction", fmt_g(e.holdout_fraction)},
      {"n_per_class", std::to_string(e.n_per_class)},
      {"gate_iterations", std::to_string(trained.gate_fit.iterations)},
      {"gate_converged", trained.gate_fit.converged ? "1" : "0"},
  };
  save_checkpoint(rep.checkpoint, trained.model, std::move(header));
  write_file_atomic(rep.loss_trace, format_loss_trace(trained.inner_alignment_trace, trained.final_alignment_trace));
  log << "train: fused_dim=" << rep.fused_dim << " loss " << rep.initial_loss << " -> " << rep.final_loss
      << " gate_iterations=" << trained.gate_fit.iterations << "\n";
  log << "  wrote " << rep.checkpoint.string() << "\n  wrote " << rep.loss_trace.string() << "\n";
  return rep;
}

struct EvalReport {
  EvalMode mode = EvalMode::gzsl;
  std::size_t fused_dim = 0;
  std::optional<EvaluationResult> gzsl;
  double zsl_acc = 0.0;
  std::vector<ClassId> zsl_truths;
  std::vector<ClassId> zsl_predictions;
  std::filesystem::path metrics_csv;
  std::filesystem::path summary;
  std::filesystem::path predictions_csv;
};

inline std::string metrics_csv_header() { return "name,split,seed,acc_s,acc_u,h,zsl_acc\n"; }

inline EvalReport cmd_eval(const RunConfig& cfg, EvalMode mode, std::ostream& log) {
  const LoadedData data = load_data(cfg);
  LoadedCheckpoint ckpt = load_checkpoint(cfg.checkpoint_path());
  GzslModel& model = ckpt.model;
  model.gate.threshold = cfg.experiment.gate.threshold;

  EvalReport rep;
  rep.mode = mode;
  rep.fused_dim = fused_dim(data.dataset.semantics, cfg.experiment.semantic_mode);
  const std::size_t trained_dim = model.alignment.text.input_dim();
  if (rep.fused_dim != trained_dim) {
    throw ConfigError("semantic mode " + std::string(to_string(cfg.experiment.semantic_mode)) + " gives fused_dim " +
                      std::to_string(rep.fused_dim) + " but the checkpoint was trained with fused_dim " +
                      std::to_string(trained_dim));
  }
  if (model.alignment.skeleton.input_dim() != data.dataset.skeleton.cols()) {
    throw ShapeError("checkpoint skeleton dim differs from the feature file");
  }
  log << "eval: mode=" << (mode == EvalMode::zsl ? "zsl" : "gzsl")
      << " semantic_mode=" << to_string(cfg.experiment.semantic_mode) << " fused_dim=" << rep.fused_dim
      << " gate_threshold=" << model.gate.threshold << "\n";

  // The held-out rows are those the training run set aside.
  const std::uint64_t seed = header_u64(ckpt.header, "seed");
  const double test_fraction = header_double(ckpt.header, "seen_test_fraction");
  const SeenTestSplit rows =
      split_train_test(data.dataset.labels, data.split, test_fraction, stage_seed(seed, SeedStream::seen_test_split));
  const Matrix<double> test_x = data.dataset.skeleton.gather_rows(rows.test);
  const std::vector<ClassId> test_y = gather_labels(data.dataset.labels, rows.test);

  std::string predictions = "row,truth,prediction,route\n";
  std::string metrics = metrics_csv_header();
  std::string summary;
  auto kv = [&](const std::string& k, const std::string& v) { summary += k + "=" + v + "\n"; };
  kv("name", cfg.name);
  kv("split", data.split.name);
  kv("seed", std::to_string(seed));
  kv("mode", mode == EvalMode::zsl ? "zsl" : "gzsl");
  kv("semantic_mode", std::string(to_string(cfg.experiment.semantic_mode)));
  kv("fused_dim", std::to_string(rep.fused_dim));
  kv("gate_threshold", fmt_g(model.gate.threshold));

  const std::string row_prefix = cfg.name + "," + data.split.name + "," + std::to_string(seed) + ",";
  if (mode == EvalMode::gzsl) {
    EvaluationResult r = evaluate_model(model, test_x, test_y, data.split);
    for (std::size_t i = 0; i < r.predictions.size(); ++i) {
      predictions += std::to_string(rows.test[i]) + "," + std::to_string(r.truths[i]) + "," +
                     std::to_string(r.predictions[i]) + "," +
                     (data.split.is_unseen(r.predictions[i]) ? "unseen" : "seen") + "\n";
    }
    metrics += row_prefix + fmt_g(r.gated.acc_s) + "," + fmt_g(r.gated.acc_u) + "," + fmt_g(r.gated.h) + "," +
               fmt_g(r.zsl_acc) + "\n";
    kv("n_test", std::to_string(test_y.size()));
    kv("acc_s", fmt_g(r.gated.acc_s));
    kv("acc_u", fmt_g(r.gated.acc_u));
    kv("h", fmt_g(r.gated.h));
    kv("zsl_acc", fmt_g(r.zsl_acc));
    kv("oracle_gate_acc_s", fmt_g(r.oracle_gate.acc_s));
    kv("oracle_gate_acc_u", fmt_g(r.oracle_gate.acc_u));
    kv("oracle_gate_h", fmt_g(r.oracle_gate.h));
    kv("no_gate_h", fmt_g(r.no_gate.h));
    kv("gate_accuracy", fmt_g(r.gate_accuracy));
    rep.zsl_acc = r.zsl_acc;
    log << "eval: acc_s=" << r.gated.acc_s << " acc_u=" << r.gated.acc_u << " h=" << r.gated.h
        << " zsl_acc=" << r.zsl_acc << " oracle_gate_h=" << r.oracle_gate.h << "\n";
    rep.gzsl = std::move(r);
  } else {
    std::vector<std::size_t> unseen_rows;
    for (std::size_t i = 0; i < test_y.size(); ++i) {
      if (data.split.is_unseen(test_y[i])) unseen_rows.push_back(i);
    }
    const Matrix<double> ux = test_x.gather_rows(unseen_rows);
    rep.zsl_truths = gather_labels(test_y, unseen_rows);
    rep.zsl_predictions = map_rows<ClassId>(ux, [&](const Matrix<double>& c) { return classify_zsl(model.alignment, model.unseen_head, c); });
    rep.zsl_acc = zsl_accuracy(rep.zsl_predictions, rep.zsl_truths);
    for (std::size_t i = 0; i < unseen_rows.size(); ++i) {
      predictions += std::to_string(rows.test[unseen_rows[i]]) + "," + std::to_string(rep.zsl_truths[i]) + "," +
                     std::to_string(rep.zsl_predictions[i]) + ",unseen\n";
    }
    metrics += row_prefix + ",,," + fmt_g(rep.zsl_acc) + "\n";
    kv("n_test", std::to_string(unseen_rows.size()));
    kv("zsl_acc", fmt_g(rep.zsl_acc));
    log << "eval: zsl_acc=" << rep.zsl_acc << "\n";
  }

  rep.metrics_csv = cfg.out_dir / "metrics.csv";
  rep.summary = cfg.out_dir / "summary.txt";
  rep.predictions_csv = cfg.out_dir / "predictions.csv";
  write_file_atomic(rep.metrics_csv, metrics);
  write_file_atomic(rep.summary, summary);
  write_file_atomic(rep.predictions_csv, predictions);
  log << "  wrote " << rep.metrics_csv.string() << "\n  wrote " << rep.summary.string() << "\n  wrote "
      << rep.predictions_csv.string() << "\n";
  return rep;
}

inline std::string format_table_recomputation(const std::vector<TableRecomputation>& rows) {
  std::string out = "table,method,split,acc_s,acc_u,printed_h,recomputed_h,status\n";
  for (const auto& r : rows) {
    const char* status = r.matches ? "ok" : (r.row->printed_h_inconsistent ? "printed-inconsistent" : "MISMATCH");
    out += std::string(r.row->table) + "," + std::string(r.row->method) + "," + std::string(r.row->split) + "," +
           format_fixed(r.row->acc_s, 2) + "," + format_fixed(r.row->acc_u, 2) + "," + format_fixed(r.row->h, 2) +
           "," + format_fixed(r.recomputed_h, 2) + "," + status + "\n";
  }
  return out;
}

// Returns true when every unflagged row reproduces.
inline bool cmd_recompute_tables(std::ostream& log, const std::filesystem::path& csv_out = {}) {
  const auto rows = recompute_published_tables();
  const std::string table = format_table_recomputation(rows);
  log << table;
  if (!csv_out.empty()) write_file_atomic(csv_out, table);
  bool ok = true;
  for (const auto& r : rows) ok = ok && (r.matches != r.row->printed_h_inconsistent);
  return ok;
}

inline bool cmd_selfcheck(std::ostream& log) {
  const SelfCheckReport rep = run_selfcheck();
  for (const auto& l : rep.lines) log << (l.pass ? "PASS " : "FAIL ") << l.name << ": " << l.detail << "\n";
  log << "selfcheck: " << (rep.pass() ? "PASS" : "FAIL") << " in " << format_fixed(rep.seconds, 2) << " s\n";
  return rep.pass();
}

}  // namespace msf
