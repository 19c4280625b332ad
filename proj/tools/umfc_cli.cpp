// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The UMFC Authors
//
// umfc: calibrate vision-language embeddings without labels.
//
// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
// degeneracy. Every flag can also be set through a UMFC_* environment
// variable; an explicit flag wins.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "umfc/umfc.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct Failure {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, std::string message) { throw Failure{code, std::move(message)}; }

void check(umfc_status s) {
  if (s == UMFC_OK) return;
  int code = kExitData;
  switch (umfc_status_classify(s)) {
    case UMFC_CLASS_USAGE: code = kExitUsage; break;
    case UMFC_CLASS_NUMERIC: code = kExitNumeric; break;
    default: break;
  }
  fail(code, umfc_last_error());
}

struct MatrixDel {
  void operator()(umfc_matrix* p) const { umfc_matrix_free(p); }
};
struct BankDel {
  void operator()(umfc_bank* p) const { umfc_bank_free(p); }
};
struct PredDel {
  void operator()(umfc_predictions* p) const { umfc_predictions_free(p); }
};
struct StreamDel {
  void operator()(umfc_stream* p) const { umfc_stream_free(p); }
};
using MatrixPtr = std::unique_ptr<umfc_matrix, MatrixDel>;
using BankPtr = std::unique_ptr<umfc_bank, BankDel>;
using PredPtr = std::unique_ptr<umfc_predictions, PredDel>;
using StreamPtr = std::unique_ptr<umfc_stream, StreamDel>;

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

MatrixPtr load_matrix(const std::string& path) {
  umfc_matrix* m = nullptr;
  check(ends_with(path, ".csv") ? umfc_matrix_read_csv(path.c_str(), &m) : umfc_matrix_read(path.c_str(), &m));
  return MatrixPtr(m);
}

BankPtr load_bank(const std::string& path, const std::string& names) {
  umfc_bank* b = nullptr;
  check(umfc_bank_read(path.c_str(), names.c_str(), &b));
  return BankPtr(b);
}

StreamPtr load_state(const std::string& path) {
  umfc_stream* s = nullptr;
  check(umfc_stream_load(path.c_str(), &s));
  return StreamPtr(s);
}

// Writes to `path`, or to stdout when path is empty or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) fail(kExitData, "Io: cannot open '" + path + "' for writing");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  void close(const std::string& path) {
    if (file_.is_open()) {
      file_.close();
      if (!file_) fail(kExitData, "Io: failed writing '" + path + "'");
    } else {
      std::cout.flush();
    }
  }

 private:
  std::ofstream file_;
};

// Engine flags shared by the calibrating subcommands.
struct EngineFlags {
  umfc_config cfg{};
  std::string mode = "memory";
  bool no_normalize_input = false;
  bool normalize_shifts = false;
  bool ema_additive = false;

  EngineFlags() { umfc_config_default(&cfg); }

  void add(CLI::App* app, bool streaming) {
    app->add_option("--clusters,-m", cfg.clusters, "number of domain clusters M")
        ->envname("UMFC_CLUSTERS")
        ->capture_default_str();
    app->add_option("--tau", cfg.tau, "softmax temperature")->envname("UMFC_TAU")->capture_default_str();
    app->add_option("--seed", cfg.seed, "k-means seed")->envname("UMFC_SEED")->capture_default_str();
    app->add_option("--max-iters", cfg.max_iters, "k-means iteration cap")
        ->envname("UMFC_MAX_ITERS")
        ->capture_default_str();
    app->add_option("--tol", cfg.tol, "k-means centroid-shift tolerance")->envname("UMFC_TOL")->capture_default_str();
    app->add_flag("--no-normalize-input", no_normalize_input,
                  "keep raw feature and text norms (default: L2-normalize at ingestion)")
        ->envname("UMFC_NO_NORMALIZE_INPUT");
    app->add_flag("--normalize-shifts", normalize_shifts, "subtract unit shift directions (default: off)")
        ->envname("UMFC_NORMALIZE_SHIFTS");
    if (streaming) {
      app->add_option("--mode", mode, "prototype update: memory or ema")
          ->envname("UMFC_MODE")
          ->check(CLI::IsMember({"memory", "ema"}))
          ->capture_default_str();
      app->add_option("--batch-size", cfg.batch_size, "rows per streaming batch")
          ->envname("UMFC_BATCH_SIZE")
          ->capture_default_str();
      app->add_option("--eta", cfg.eta, "EMA weight in (0,1]")->envname("UMFC_ETA")->capture_default_str();
      app->add_flag("--ema-additive", ema_additive, "use c <- c + eta*c' instead of the convex EMA (default: off)")
          ->envname("UMFC_EMA_ADDITIVE");
    }
  }

  umfc_config resolve() {
    cfg.mode = mode == "ema" ? UMFC_MODE_EMA : UMFC_MODE_MEMORY;
    cfg.normalize_input = no_normalize_input ? 0 : 1;
    cfg.normalize_shifts = normalize_shifts ? 1 : 0;
    cfg.ema_additive = ema_additive ? 1 : 0;
    if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau)) fail(kExitUsage, "usage: --tau must be positive");
    if (cfg.clusters == 0) fail(kExitUsage, "usage: --clusters must be at least 1");
    if (cfg.batch_size == 0) fail(kExitUsage, "usage: --batch-size must be at least 1");
    if (!(cfg.eta > 0.0 && cfg.eta <= 1.0)) fail(kExitUsage, "usage: --eta must lie in (0, 1]");
    return cfg;
  }
};

struct BankFlags {
  std::string bank;
  std::string names;

  void add(CLI::App* app) {
    app->add_option("--bank", bank, "class text bank file")->envname("UMFC_BANK")->required();
    app->add_option("--names", names, "class names file, one per line")->envname("UMFC_NAMES")->required();
  }
};

void write_predictions(const umfc_matrix* test, const umfc_predictions* p, const std::string& path) {
  Output out(path);
  auto& os = out.stream();
  os.precision(9);
  for (size_t i = 0; i < umfc_predictions_count(p); ++i) {
    const int label = umfc_predictions_label(p, i);
    os << umfc_matrix_id(test, i) << '\t' << label << '\t' << umfc_predictions_probs(p, i)[label] << '\t'
       << umfc_predictions_cluster(p, i) << '\t' << umfc_predictions_flags(p, i) << '\n';
  }
  out.close(path);
}

void write_probs(const umfc_predictions* p, const std::string& path) {
  if (path.empty()) return;
  Output out(path);
  auto& os = out.stream();
  os.precision(17);
  const size_t k = umfc_predictions_classes(p);
  for (size_t i = 0; i < umfc_predictions_count(p); ++i) {
    const double* row = umfc_predictions_probs(p, i);
    for (size_t j = 0; j < k; ++j) os << (j ? "\t" : "") << row[j];
    os << '\n';
  }
  out.close(path);
}

struct Accuracy {
  std::vector<umfc_domain_accuracy> rows;
  double overall = 0.0;
};

Accuracy accuracy(const umfc_predictions* p, const umfc_matrix* truth) {
  Accuracy a;
  size_t n = 0;
  check(umfc_accuracy(p, truth, 0, nullptr, 0, &n, nullptr));
  a.rows.resize(n);
  check(umfc_accuracy(p, truth, 0, a.rows.data(), n, &n, &a.overall));
  return a;
}

void write_report(const Accuracy& a, const std::string& path) {
  Output out(path);
  auto& os = out.stream();
  os.precision(9);
  os << "domain\tcorrect\ttotal\taccuracy\n";
  for (const auto& r : a.rows) os << r.domain << '\t' << r.correct << '\t' << r.total << '\t' << r.accuracy << '\n';
  os << "macro\t\t\t" << a.overall << '\n';
  out.close(path);
}

// Streams `test` in file order; `state` is updated in place.
PredPtr run_stream(umfc_stream* state, const umfc_matrix* test, const umfc_bank* bank, size_t batch_size,
                   const std::string& snapshot_path, size_t snapshot_every) {
  const size_t n = umfc_matrix_rows(test);
  umfc_predictions* all = nullptr;
  size_t batches = 0;
  std::vector<size_t> idx;
  for (size_t start = 0; start < n; start += batch_size) {
    const size_t end = std::min(n, start + batch_size);
    idx.resize(end - start);
    for (size_t i = start; i < end; ++i) idx[i - start] = i;
    umfc_matrix* batch = nullptr;
    check(umfc_matrix_subset(test, idx.data(), idx.size(), &batch));
    MatrixPtr batch_guard(batch);
    umfc_predictions* p = nullptr;
    check(umfc_stream_step(state, batch, bank, &p));
    if (!all) {
      all = p;
    } else {
      PredPtr guard(p);
      check(umfc_predictions_append(all, p));
    }
    ++batches;
    if (snapshot_every > 0 && !snapshot_path.empty() && batches % snapshot_every == 0)
      check(umfc_stream_save(state, snapshot_path.c_str()));
  }
  if (!all) {
    // No rows: an empty prediction set with the bank's class count.
    umfc_matrix* empty = nullptr;
    check(umfc_matrix_subset(test, nullptr, 0, &empty));
    MatrixPtr guard(empty);
    check(umfc_predict(state, empty, bank, 0.0, &all));
  }
  return PredPtr(all);
}

PredPtr run_zero_shot(const umfc_matrix* test, const umfc_bank* bank, const umfc_config& cfg) {
  umfc_predictions* p = nullptr;
  check(umfc_zero_shot(test, bank, &cfg, &p));
  return PredPtr(p);
}

PredPtr run_transduce(const umfc_matrix* test, const umfc_bank* bank, const umfc_config& cfg) {
  umfc_predictions* p = nullptr;
  check(umfc_transduce(test, bank, &cfg, &p, nullptr));
  return PredPtr(p);
}

double l2(const double* v, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += v[i] * v[i];
  return std::sqrt(s);
}

// ---- subcommands ----

struct FitCmd {
  std::string train;
  BankFlags bank;
  EngineFlags engine;
  std::string out_state;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("fit", "cluster unlabeled training features and save the calibration state");
    app->add_option("--train", train, "training features (.umfc binary or .csv)")->envname("UMFC_TRAIN")->required();
    bank.add(app);
    engine.add(app, false);
    app->add_option("--out-state", out_state, "state snapshot to write")->envname("UMFC_OUT_STATE")->required();
    app->callback([this] { run(); });
  }

  void run() {
    const umfc_config cfg = engine.resolve();
    MatrixPtr x = load_matrix(train);
    BankPtr b = load_bank(bank.bank, bank.names);
    umfc_stream* s = nullptr;
    check(umfc_fit(x.get(), b.get(), &cfg, &s));
    StreamPtr state(s);
    check(umfc_stream_save(state.get(), out_state.c_str()));
    const size_t d = umfc_stream_dim(state.get());
    std::cout.precision(9);
    std::cout << "cluster\tsize\tshift_norm\n";
    for (size_t m = 0; m < umfc_stream_clusters(state.get()); ++m)
      std::cout << m << '\t' << umfc_stream_cluster_count(state.get(), m) << '\t'
                << l2(umfc_stream_text_shift(state.get(), m), d) << '\n';
    std::cerr << "wrote " << out_state << '\n';
  }
};

struct PredictCmd {
  std::string state;
  std::string test;
  BankFlags bank;
  double tau = 0.0;
  std::string out;
  std::string probs;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("predict", "classify features with a saved calibration state");
    app->add_option("--state", state, "state snapshot")->envname("UMFC_STATE")->required();
    app->add_option("--test", test, "features to classify")->envname("UMFC_TEST")->required();
    bank.add(app);
    app->add_option("--tau", tau, "softmax temperature (default: the state's, 0.01 unless fitted otherwise)")
        ->envname("UMFC_TAU");
    app->add_option("--out", out, "predictions TSV (default: stdout)")->envname("UMFC_OUT");
    app->add_option("--probs", probs, "optional full probability matrix TSV")->envname("UMFC_PROBS");
    app->callback([this, app] { run(app->count("--tau") > 0); });
  }

  void run(bool tau_given) {
    if (tau_given && (!(tau > 0.0) || !std::isfinite(tau))) fail(kExitUsage, "usage: --tau must be positive");
    StreamPtr s = load_state(state);
    MatrixPtr x = load_matrix(test);
    BankPtr b = load_bank(bank.bank, bank.names);
    umfc_predictions* p = nullptr;
    check(umfc_predict(s.get(), x.get(), b.get(), tau_given ? tau : 0.0, &p));
    PredPtr preds(p);
    write_predictions(x.get(), preds.get(), out);
    write_probs(preds.get(), probs);
  }
};

struct TransduceCmd {
  std::string test;
  BankFlags bank;
  EngineFlags engine;
  std::string out;
  std::string probs;
  std::string report;
  std::string out_state;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("transduce", "cluster and calibrate the test set itself, then classify it");
    app->add_option("--test", test, "features to classify")->envname("UMFC_TEST")->required();
    bank.add(app);
    engine.add(app, false);
    app->add_option("--out", out, "predictions TSV (default: stdout)")->envname("UMFC_OUT");
    app->add_option("--probs", probs, "optional full probability matrix TSV")->envname("UMFC_PROBS");
    app->add_option("--report", report, "per-domain accuracy TSV (needs class and domain labels)")
        ->envname("UMFC_REPORT");
    app->add_option("--out-state", out_state, "optional state snapshot")->envname("UMFC_OUT_STATE");
    app->callback([this] { run(); });
  }

  void run() {
    const umfc_config cfg = engine.resolve();
    MatrixPtr x = load_matrix(test);
    BankPtr b = load_bank(bank.bank, bank.names);
    if (!report.empty() && (!umfc_matrix_has_class_labels(x.get()) || !umfc_matrix_has_domain_labels(x.get())))
      fail(kExitData, "MissingLabels: --report needs class and domain labels");
    umfc_predictions* p = nullptr;
    umfc_stream* s = nullptr;
    check(umfc_transduce(x.get(), b.get(), &cfg, &p, out_state.empty() ? nullptr : &s));
    PredPtr preds(p);
    StreamPtr state(s);
    if (!report.empty()) write_report(accuracy(preds.get(), x.get()), report);
    write_predictions(x.get(), preds.get(), out);
    write_probs(preds.get(), probs);
    if (state) check(umfc_stream_save(state.get(), out_state.c_str()));
  }
};

struct StreamCmd {
  std::string test;
  BankFlags bank;
  EngineFlags engine;
  std::string resume;
  size_t snapshot_every = 0;
  std::string out;
  std::string probs;
  std::string report;
  std::string out_state;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("stream", "test-time adaptation over the test file in row order");
    app->add_option("--test", test, "features to classify, streamed in file order")->envname("UMFC_TEST")->required();
    bank.add(app);
    engine.add(app, true);
    app->add_option("--state", resume, "continue from this snapshot instead of a fresh state (its config wins)")
        ->envname("UMFC_STATE");
    app->add_option("--snapshot-every", snapshot_every, "rewrite --out-state every N batches (0: only at the end)")
        ->envname("UMFC_SNAPSHOT_EVERY")
        ->capture_default_str();
    app->add_option("--out", out, "predictions TSV (default: stdout)")->envname("UMFC_OUT");
    app->add_option("--probs", probs, "optional full probability matrix TSV")->envname("UMFC_PROBS");
    app->add_option("--report", report, "per-domain accuracy TSV (needs class and domain labels)")
        ->envname("UMFC_REPORT");
    app->add_option("--out-state", out_state, "final state snapshot")->envname("UMFC_OUT_STATE");
    app->callback([this] { run(); });
  }

  void run() {
    umfc_config cfg = engine.resolve();
    MatrixPtr x = load_matrix(test);
    BankPtr b = load_bank(bank.bank, bank.names);
    if (!report.empty() && (!umfc_matrix_has_class_labels(x.get()) || !umfc_matrix_has_domain_labels(x.get())))
      fail(kExitData, "MissingLabels: --report needs class and domain labels");
    StreamPtr state;
    if (!resume.empty()) {
      state = load_state(resume);
      umfc_stream_config(state.get(), &cfg);
    } else {
      umfc_stream* s = nullptr;
      check(umfc_stream_new(&cfg, &s));
      state.reset(s);
    }
    PredPtr preds = run_stream(state.get(), x.get(), b.get(), cfg.batch_size, out_state, snapshot_every);
    if (!report.empty()) write_report(accuracy(preds.get(), x.get()), report);
    write_predictions(x.get(), preds.get(), out);
    write_probs(preds.get(), probs);
    if (!out_state.empty()) check(umfc_stream_save(state.get(), out_state.c_str()));
    std::cerr << "streamed " << umfc_matrix_rows(x.get()) << " rows in " << umfc_stream_batches_seen(state.get())
              << " batches\n";
  }
};

struct SynthCmd {
  umfc_synth_spec spec{};
  std::string spec_file;
  std::string out_prefix;
  bool no_shuffle = false;
  CLI::App* app = nullptr;

  SynthCmd() { umfc_synth_spec_default(&spec); }

  void add(CLI::App& root) {
    app = root.add_subcommand("synth", "write a seeded synthetic multi-domain benchmark");
    app->add_option("--spec-file", spec_file, "JSON object with any of the spec keys below (flags override it)")
        ->envname("UMFC_SPEC_FILE");
    app->add_option("--classes", spec.classes, "classes K")->envname("UMFC_CLASSES")->capture_default_str();
    app->add_option("--domains", spec.domains, "domains Z")->envname("UMFC_DOMAINS")->capture_default_str();
    app->add_option("--dim", spec.dim, "feature dimension D (needs D >= K + Z)")
        ->envname("UMFC_DIM")
        ->capture_default_str();
    app->add_option("--class-sep", spec.class_sep, "class anchor scale")->envname("UMFC_CLASS_SEP")->capture_default_str();
    app->add_option("--domain-offset-norm", spec.domain_offset_norm, "domain offset scale")
        ->envname("UMFC_DOMAIN_OFFSET_NORM")
        ->capture_default_str();
    app->add_option("--noise-sigma", spec.noise_sigma, "isotropic image noise")
        ->envname("UMFC_NOISE_SIGMA")
        ->capture_default_str();
    app->add_option("--samples-per-cell", spec.samples_per_cell, "images per (class, domain) cell")
        ->envname("UMFC_SAMPLES_PER_CELL")
        ->capture_default_str();
    app->add_option("--text-class-bias", spec.text_class_bias, "pull of class c's text toward domain c mod Z")
        ->envname("UMFC_TEXT_CLASS_BIAS")
        ->capture_default_str();
    app->add_option("--text-domain-lean", spec.text_domain_lean, "pull of every class text toward domain 0")
        ->envname("UMFC_TEXT_DOMAIN_LEAN")
        ->capture_default_str();
    app->add_option("--text-perturbation", spec.text_perturbation, "noise added to class texts")
        ->envname("UMFC_TEXT_PERTURBATION")
        ->capture_default_str();
    app->add_flag("--no-shuffle", no_shuffle, "keep rows grouped by domain and class (default: shuffled)")
        ->envname("UMFC_NO_SHUFFLE");
    app->add_option("--seed", spec.seed, "generator seed")->envname("UMFC_SEED")->capture_default_str();
    app->add_option("--out-prefix", out_prefix,
                    "writes <prefix>.images.umfc (+ .labels), <prefix>.bank.umfc, <prefix>.names.txt, "
                    "<prefix>.domains.umfc, <prefix>.domains.txt")
        ->envname("UMFC_OUT_PREFIX")
        ->required();
    app->callback([this] { run(); });
  }

  std::vector<double> imbalance;

  void load_spec_file() {
    std::ifstream in(spec_file);
    if (!in) fail(kExitData, "Io: cannot open '" + spec_file + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      fail(kExitData, std::string("MalformedFile: ") + e.what());
    }
    if (!j.is_object()) fail(kExitData, "MalformedFile: spec file must hold a JSON object");
    try {
      for (const auto& [key, v] : j.items()) {
        const CLI::Option* opt = app->get_option_no_throw("--" + dashed(key));
        if (opt && opt->count() > 0) continue;
        if (key == "classes") spec.classes = v.get<size_t>();
        else if (key == "domains") spec.domains = v.get<size_t>();
        else if (key == "dim") spec.dim = v.get<size_t>();
        else if (key == "class_sep") spec.class_sep = v.get<double>();
        else if (key == "domain_offset_norm") spec.domain_offset_norm = v.get<double>();
        else if (key == "noise_sigma") spec.noise_sigma = v.get<double>();
        else if (key == "samples_per_cell") spec.samples_per_cell = v.get<size_t>();
        else if (key == "text_class_bias") spec.text_class_bias = v.get<double>();
        else if (key == "text_domain_lean") spec.text_domain_lean = v.get<double>();
        else if (key == "text_perturbation") spec.text_perturbation = v.get<double>();
        else if (key == "shuffle") spec.shuffle = v.get<bool>() ? 1 : 0;
        else if (key == "seed") spec.seed = v.get<uint64_t>();
        else if (key == "class_imbalance") {
          imbalance.clear();
          for (const auto& row : v)
            for (const auto& w : row) imbalance.push_back(w.get<double>());
        } else {
          fail(kExitUsage, "usage: unknown spec key '" + key + "'");
        }
      }
    } catch (const nlohmann::json::exception& e) {
      fail(kExitData, std::string("MalformedFile: ") + e.what());
    }
  }

  static std::string dashed(std::string s) {
    std::replace(s.begin(), s.end(), '_', '-');
    return s;
  }

  void run() {
    if (!spec_file.empty()) load_spec_file();
    if (no_shuffle) spec.shuffle = 0;
    if (!imbalance.empty()) {
      if (imbalance.size() != spec.domains * spec.classes)
        fail(kExitUsage, "usage: class_imbalance must be domains x classes");
      spec.class_imbalance = imbalance.data();
    }
    umfc_matrix* images = nullptr;
    umfc_bank* bank = nullptr;
    umfc_bank* domains = nullptr;
    check(umfc_synth_generate(&spec, &images, &bank, &domains));
    MatrixPtr im(images);
    BankPtr tb(bank);
    BankPtr db(domains);
    check(umfc_matrix_write(im.get(), (out_prefix + ".images.umfc").c_str()));
    check(umfc_bank_write(tb.get(), (out_prefix + ".bank.umfc").c_str(), (out_prefix + ".names.txt").c_str()));
    check(umfc_bank_write(db.get(), (out_prefix + ".domains.umfc").c_str(), (out_prefix + ".domains.txt").c_str()));
    std::cerr << "wrote " << umfc_matrix_rows(im.get()) << " images, " << umfc_bank_size(tb.get()) << " classes, "
              << umfc_bank_size(db.get()) << " domains to " << out_prefix << ".*\n";
  }
};

struct DiagnoseCmd {
  std::string which;
  std::string test;
  BankFlags bank;
  std::string domain_bank;
  std::string domain_names;
  std::string state;
  EngineFlags engine;
  double probe_tau = 1.0;
  size_t per_cell = 50;
  uint64_t balance_seed = 0;
  std::string out;
  std::string out_post;
  std::string report;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("diagnose", "prediction histogram, domain-bias probe, direction check, balancing");
    app->add_option("--which", which, "hist | probe | direction | balance")
        ->envname("UMFC_WHICH")
        ->required()
        ->check(CLI::IsMember({"hist", "probe", "direction", "balance"}));
    app->add_option("--test", test, "labelled features (hist, direction, balance; probe without --state)")
        ->envname("UMFC_TEST");
    app->add_option("--bank", bank.bank, "class text bank file")->envname("UMFC_BANK");
    app->add_option("--names", bank.names, "class names file")->envname("UMFC_NAMES");
    app->add_option("--domain-bank", domain_bank, "domain anchor bank (probe, direction)")
        ->envname("UMFC_DOMAIN_BANK");
    app->add_option("--domain-names", domain_names, "domain names file")->envname("UMFC_DOMAIN_NAMES");
    app->add_option("--state", state, "calibration state; hist predicts with it, probe takes its shifts")
        ->envname("UMFC_STATE");
    engine.add(app, false);
    app->add_option("--probe-tau", probe_tau, "probe softmax temperature")
        ->envname("UMFC_PROBE_TAU")
        ->capture_default_str();
    app->add_option("--per-cell", per_cell, "balance: rows kept per (class, domain) cell")
        ->envname("UMFC_PER_CELL")
        ->capture_default_str();
    app->add_option("--balance-seed", balance_seed, "balance: sampling seed")
        ->envname("UMFC_BALANCE_SEED")
        ->capture_default_str();
    app->add_option("--out", out, "main artifact (default: stdout); probe writes the uncalibrated bank here")
        ->envname("UMFC_OUT");
    app->add_option("--out-post", out_post, "probe: calibrated bank probe CSV")->envname("UMFC_OUT_POST");
    app->add_option("--report", report, "balance: shortfall TSV (default: stderr)")->envname("UMFC_REPORT");
    app->callback([this] { run(); });
  }

  void need(const std::string& v, const char* flag) {
    if (v.empty()) fail(kExitUsage, std::string("usage: --which ") + which + " needs " + flag);
  }

  void run() {
    if (which == "hist") hist();
    else if (which == "probe") probe();
    else if (which == "direction") direction();
    else balance();
  }

  void hist() {
    need(test, "--test");
    need(bank.bank, "--bank");
    need(bank.names, "--names");
    const umfc_config cfg = engine.resolve();
    MatrixPtr x = load_matrix(test);
    BankPtr b = load_bank(bank.bank, bank.names);
    PredPtr p;
    if (!state.empty()) {
      StreamPtr s = load_state(state);
      umfc_predictions* raw = nullptr;
      check(umfc_predict(s.get(), x.get(), b.get(), 0.0, &raw));
      p.reset(raw);
    } else {
      p = run_zero_shot(x.get(), b.get(), cfg);
    }
    const size_t k = umfc_bank_size(b.get());
    std::vector<size_t> counts(k);
    check(umfc_histogram(p.get(), counts.data(), k));
    Output o(out);
    o.stream() << "class,name,count\n";
    for (size_t c = 0; c < k; ++c) o.stream() << c << ',' << umfc_bank_name(b.get(), c) << ',' << counts[c] << '\n';
    o.close(out);
  }

  void write_probe(const umfc_bank* classes, const umfc_bank* anchors, const std::string& path) {
    const size_t k = umfc_bank_size(classes);
    const size_t z = umfc_bank_size(anchors);
    std::vector<double> rows(k * z), agg(z);
    double kl = 0.0;
    check(umfc_domain_probe(classes, anchors, probe_tau, rows.data(), agg.data(), &kl));
    Output o(path);
    auto& os = o.stream();
    os.precision(9);
    os << "class";
    for (size_t j = 0; j < z; ++j) os << ',' << umfc_bank_name(anchors, j);
    os << '\n';
    for (size_t c = 0; c < k; ++c) {
      os << umfc_bank_name(classes, c);
      for (size_t j = 0; j < z; ++j) os << ',' << rows[c * z + j];
      os << '\n';
    }
    os << "aggregate";
    for (double a : agg) os << ',' << a;
    os << "\nkl_to_uniform," << kl << '\n';
    o.close(path);
    std::cerr << (path.empty() ? "probe" : path) << ": kl_to_uniform " << kl << '\n';
  }

  BankPtr load_domains() {
    need(domain_bank, "--domain-bank");
    need(domain_names, "--domain-names");
    return load_bank(domain_bank, domain_names);
  }

  void probe() {
    need(bank.bank, "--bank");
    need(bank.names, "--names");
    BankPtr b = load_bank(bank.bank, bank.names);
    BankPtr d = load_domains();
    write_probe(b.get(), d.get(), out);
    if (out_post.empty()) return;
    StreamPtr s;
    if (!state.empty()) {
      s = load_state(state);
    } else {
      need(test, "--test or --state");
      const umfc_config cfg = engine.resolve();
      MatrixPtr x = load_matrix(test);
      umfc_predictions* p = nullptr;
      umfc_stream* raw = nullptr;
      check(umfc_transduce(x.get(), b.get(), &cfg, &p, &raw));
      umfc_predictions_free(p);
      s.reset(raw);
    }
    umfc_bank* cal = nullptr;
    check(umfc_stream_calibrated_bank(s.get(), b.get(), &cal));
    BankPtr calibrated(cal);
    write_probe(calibrated.get(), d.get(), out_post);
  }

  void direction() {
    need(test, "--test");
    MatrixPtr x = load_matrix(test);
    BankPtr d = load_domains();
    const size_t z = umfc_bank_size(d.get());
    std::vector<double> cos(z * z);
    std::vector<int> domains(z);
    size_t found = 0;
    check(umfc_direction_check(x.get(), d.get(), cos.data(), domains.data(), &found));
    Output o(out);
    auto& os = o.stream();
    os.precision(12);
    os << "from\\to";
    for (size_t j = 0; j < found; ++j) os << ',' << domains[j];
    os << '\n';
    double worst = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < found; ++i) {
      os << domains[i];
      for (size_t j = 0; j < found; ++j) {
        const double c = cos[i * found + j];
        os << ',';
        if (i != j) {
          os << c;
          worst = std::min(worst, c);
        }
      }
      os << '\n';
    }
    o.close(out);
    std::cerr << "min off-diagonal cosine " << worst << '\n';
  }

  void balance() {
    need(test, "--test");
    MatrixPtr x = load_matrix(test);
    size_t n_idx = 0, n_short = 0;
    check(umfc_balanced_subsample(x.get(), per_cell, balance_seed, nullptr, &n_idx, nullptr, &n_short));
    std::vector<size_t> idx(n_idx);
    std::vector<umfc_shortfall> shortfalls(n_short);
    check(umfc_balanced_subsample(x.get(), per_cell, balance_seed, idx.data(), &n_idx, shortfalls.data(), &n_short));
    Output o(out);
    o.stream() << "index\tid\n";
    for (size_t i : idx) o.stream() << i << '\t' << umfc_matrix_id(x.get(), i) << '\n';
    o.close(out);
    std::ofstream rf;
    if (!report.empty()) {
      rf.open(report, std::ios::trunc);
      if (!rf) fail(kExitData, "Io: cannot open '" + report + "' for writing");
    }
    std::ostream& rs = report.empty() ? std::cerr : rf;
    rs << "class\tdomain\tavailable\trequested\n";
    for (const auto& s : shortfalls)
      rs << s.class_label << '\t' << s.domain_label << '\t' << s.available << '\t' << s.requested << '\n';
    std::cerr << "kept " << n_idx << " rows; " << n_short << " short cells\n";
  }
};

struct SweepCmd {
  std::string param;
  std::vector<std::string> values;
  std::string test;
  BankFlags bank;
  EngineFlags engine;
  std::string out;

  void add(CLI::App& root) {
    auto* app = root.add_subcommand("sweep", "accuracy over a range of one parameter (needs labelled features)");
    app->add_option("--param", param, "clusters (transductive) | batch-size | eta (streaming)")
        ->envname("UMFC_PARAM")
        ->required();
    app->add_option("--values", values, "comma-separated values")
        ->envname("UMFC_VALUES")
        ->delimiter(',')
        ->required();
    app->add_option("--test", test, "labelled features")->envname("UMFC_TEST")->required();
    bank.add(app);
    engine.add(app, true);
    app->add_option("--out", out, "sweep TSV (default: stdout)")->envname("UMFC_OUT");
    app->callback([this] { run(); });
  }

  static double parse_number(const std::string& s, bool integer) {
    try {
      size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size() || !std::isfinite(v) || (integer && (v < 1 || v != std::floor(v)))) throw 0;
      return v;
    } catch (...) {
      fail(kExitUsage, "usage: bad sweep value '" + s + "'");
    }
  }

  void run() {
    if (param != "clusters" && param != "batch-size" && param != "eta")
      fail(kExitUsage, "usage: unknown sweep parameter '" + param + "' (clusters, batch-size, eta)");
    const bool integer = param != "eta";
    std::vector<double> parsed;
    for (const auto& v : values) parsed.push_back(parse_number(v, integer));
    umfc_config base = engine.resolve();
    MatrixPtr x = load_matrix(test);
    BankPtr b = load_bank(bank.bank, bank.names);
    if (!umfc_matrix_has_class_labels(x.get()) || !umfc_matrix_has_domain_labels(x.get()))
      fail(kExitData, "MissingLabels: sweeps need class and domain labels");
    const Accuracy zs = accuracy(run_zero_shot(x.get(), b.get(), base).get(), x.get());

    Output o(out);
    auto& os = o.stream();
    os.precision(9);
    os << "param\tvalue\taccuracy\tzero_shot\tgap";
    for (const auto& r : zs.rows) os << "\tdomain" << r.domain;
    os << '\n';
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (size_t i = 0; i < parsed.size(); ++i) {
      umfc_config cfg = base;
      PredPtr p;
      if (param == "clusters") {
        cfg.clusters = static_cast<size_t>(parsed[i]);
        p = run_transduce(x.get(), b.get(), cfg);
      } else {
        if (param == "batch-size") cfg.batch_size = static_cast<size_t>(parsed[i]);
        else {
          cfg.eta = parsed[i];
          cfg.mode = UMFC_MODE_EMA;
          if (!(cfg.eta > 0.0 && cfg.eta <= 1.0)) fail(kExitUsage, "usage: eta values must lie in (0, 1]");
        }
        umfc_stream* raw = nullptr;
        check(umfc_stream_new(&cfg, &raw));
        StreamPtr s(raw);
        p = run_stream(s.get(), x.get(), b.get(), cfg.batch_size, "", 0);
      }
      const Accuracy a = accuracy(p.get(), x.get());
      lo = std::min(lo, a.overall);
      hi = std::max(hi, a.overall);
      os << param << '\t' << values[i] << '\t' << a.overall << '\t' << zs.overall << '\t' << a.overall - zs.overall;
      for (const auto& r : a.rows) os << '\t' << r.accuracy;
      os << '\n';
    }
    o.close(out);
    std::cerr << "accuracy spread " << 100.0 * (hi - lo) << " points over " << parsed.size() << " values\n";
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"umfc: label-free calibration of vision-language embeddings"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(umfc_version()));

  FitCmd fit;
  PredictCmd predict;
  TransduceCmd transduce;
  StreamCmd stream;
  SynthCmd synth;
  DiagnoseCmd diagnose;
  SweepCmd sweep;
  fit.add(app);
  predict.add(app);
  transduce.add(app);
  stream.add(app);
  synth.add(app);
  diagnose.add(app);
  sweep.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const Failure& f) {
    std::cerr << "umfc: " << f.message << '\n';
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "umfc: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}
