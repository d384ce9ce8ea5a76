// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "gatsv/binary_io.hpp"
#include "gatsv/checkpoint.hpp"
#include "gatsv/errors.hpp"
#include "gatsv/gradcheck.hpp"
#include "gatsv/rng.hpp"
#include "gatsv/train.hpp"
#include "manifest.hpp"

namespace gatsv::cli {

namespace fs = std::filesystem;

Backend parse_backend(const std::string& name) {
  if (name == "gat") return Backend::kGat;
  if (name == "cosine") return Backend::kCosine;
  if (name == "tta") return Backend::kTta;
  if (name == "bvector") return Backend::kBVector;
  throw ArgumentError("unknown backend '" + name + "'");
}

double Scorer::operator()(const UtteranceSSEs& enroll, const UtteranceSSEs& test) const {
  switch (kind) {
    case Backend::kGat:
      return score(gat, build_trial_graph(enroll, test));
    case Backend::kCosine:
      return cosine_mean_score(enroll, test);
    case Backend::kTta:
      return tta_score(enroll, test);
    case Backend::kBVector:
      return bvector_score(bvector, enroll, test);
  }
  return 0.0;
}

std::vector<ScoreLine> score_trials(const Scorer& scorer, const Corpus& corpus,
                                    const std::vector<Trial>& trials, std::size_t threads) {
  // Resolve ids up front so errors name the line deterministically.
  std::vector<UtteranceSSEs> enrolls(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    std::vector<UtteranceSSEs> parts;
    for (const auto& id : trials[i].enroll) {
      if (!corpus.contains(id)) {
        throw DataError("trial line " + std::to_string(i + 1) + ": unknown utterance id '" + id + "'");
      }
      parts.push_back(corpus.at(id));
    }
    if (!corpus.contains(trials[i].test)) {
      throw DataError("trial line " + std::to_string(i + 1) + ": unknown utterance id '" +
                      trials[i].test + "'");
    }
    enrolls[i] = average_enrollment(parts);
  }

  std::vector<ScoreLine> lines(trials.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      lines[i] = {trials[i].target, join_ids(trials[i].enroll), trials[i].test,
                  scorer(enrolls[i], corpus.at(trials[i].test))};
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, trials.size()));
  if (threads == 1) {
    work(0, trials.size());
    return lines;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> failures(threads);
  const std::size_t chunk = (trials.size() + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = std::min(trials.size(), t * chunk);
    const std::size_t end = std::min(trials.size(), begin + chunk);
    pool.emplace_back([&, t, begin, end] {
      try {
        work(begin, end);
      } catch (...) {
        failures[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
  return lines;
}

std::size_t scoring_threads() {
  if (const char* env = std::getenv("GATV_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> dims;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || v == 0) {
      throw ArgumentError("bad dims list '" + text + "'");
    }
    dims.push_back(v);
  }
  if (dims.size() < 2) throw ArgumentError("dims needs at least two entries");
  return dims;
}

std::string dims_string(const std::vector<std::size_t>& dims) {
  std::string s;
  for (std::size_t d : dims) s += (s.empty() ? "" : ",") + std::to_string(d);
  return s;
}

fs::path manifest_path(const fs::path& output) {
  return output.string() + ".manifest.json";
}

struct GenOptions {
  SynthConfig synth;
  std::size_t test_speakers = 40;
  std::size_t targets = 1000;
  std::size_t nontargets = 1000;
  std::string out;
};

int cmd_gen(const GenOptions& o, std::ostream& out) {
  Stopwatch clock;
  const fs::path dir(o.out);
  fs::create_directories(dir);
  const CorpusSplit split = split_speakers(generate(o.synth), o.test_speakers);
  const auto trials = make_trials(split.test, o.targets, o.nontargets, derive_seed(o.synth.seed, 7));
  write_embeddings(split.train, dir / "train.sse");
  write_embeddings(split.test, dir / "test.sse");
  write_trial_file(dir / "trials.txt", trials);

  Manifest m("gen");
  m.set_seed(o.synth.seed);
  m.set("speakers", static_cast<std::uint64_t>(o.synth.speakers));
  m.set("test_speakers", static_cast<std::uint64_t>(o.test_speakers));
  m.set("utterances_per_speaker", static_cast<std::uint64_t>(o.synth.utterances_per_speaker));
  m.set("segments_per_utterance", static_cast<std::uint64_t>(o.synth.segments_per_utterance));
  m.set("dim", static_cast<std::uint64_t>(o.synth.dim));
  m.set("within_noise", o.synth.within_noise);
  m.set("segment_noise", o.synth.segment_noise);
  m.set("outlier_prob", o.synth.outlier_prob);
  m.set("outlier_scale", o.synth.outlier_scale);
  m.set("targets", static_cast<std::uint64_t>(o.targets));
  m.set("nontargets", static_cast<std::uint64_t>(o.nontargets));
  for (const char* name : {"train.sse", "test.sse", "trials.txt"}) m.add_output(dir / name);
  m.add_timing("total", clock.seconds());
  m.write(dir / "manifest.json");
  out << "wrote " << split.train.size() << " train and " << split.test.size()
      << " test utterances, " << trials.size() << " trials to " << dir.string() << "\n";
  return kExitOk;
}

struct TrainOptions {
  TrainConfig config;
  std::string backend = "gat";
  std::string dims;
  std::string in;
  std::string out;
  std::string log;
  std::string loss = "hardneg";
  bool paper_preset = false;
  std::string bvec_ops = "mul,add,sub";
  std::string bvec_hidden = "256,128,64";
  std::string bvec_pooling = "pairwise";
};

int cmd_train(TrainOptions o, const CLI::App& sub, std::ostream& out) {
  Stopwatch clock;
  TrainConfig& c = o.config;
  if (o.paper_preset) {
    // Explicit flags win over the preset.
    const TrainConfig explicit_values = c;
    apply_paper_preset(c);
    if (sub.count("--epochs")) c.epochs = explicit_values.epochs;
    if (sub.count("--batch-M")) c.batch_M = explicit_values.batch_M;
    if (sub.count("--lr0")) c.lr0 = explicit_values.lr0;
    if (sub.count("--dropout")) c.dropout = explicit_values.dropout;
    if (sub.count("--weight-decay")) c.weight_decay = explicit_values.weight_decay;
  }
  c.loss = parse_loss(o.loss);
  c.validate();
  const Backend backend = parse_backend(o.backend);
  if (backend != Backend::kGat && backend != Backend::kBVector) {
    throw ArgumentError("train: backend must be gat or bvector");
  }

  const Corpus corpus = read_embeddings(o.in);
  if (corpus.empty()) throw DataError("training corpus " + o.in + " is empty");
  std::ofstream log_file;
  if (!o.log.empty()) {
    log_file.open(o.log, std::ios::binary);
    if (!log_file) throw DataError("cannot open " + o.log + " for writing");
  }
  TrainObserver observer;
  observer.on_epoch = [&](const EpochLog& e) {
    if (log_file) {
      write_loss_log(log_file, {e});
      log_file.flush();
    }
  };

  Manifest m("train");
  std::vector<EpochLog> history;
  if (backend == Backend::kGat) {
    const auto dims = o.dims.empty() ? default_dims(corpus.dim()) : parse_dims(o.dims);
    if (dims.front() != corpus.dim()) {
      throw DimensionError("dims start with " + std::to_string(dims.front()) + " but the corpus has d=" +
                           std::to_string(corpus.dim()));
    }
    auto result = train_gat(corpus, dims, c, observer);
    history = std::move(result.history);
    save_gat(result.model, o.out);
    m.set("dims", dims_string(dims));
  } else {
    std::vector<std::size_t> hidden;
    if (!o.bvec_hidden.empty()) {
      for (const auto& h : split_ids(o.bvec_hidden)) hidden.push_back(parse_dims(h + ",1").front());
    }
    const PairPooling pooling = o.bvec_pooling == "mean" ? PairPooling::kMean
                                : o.bvec_pooling == "pairwise"
                                    ? PairPooling::kPairwise
                                    : throw ArgumentError("pooling must be pairwise or mean");
    BVectorModel model = init_bvector(parse_bvector_ops(o.bvec_ops), corpus.dim(), hidden,
                                      derive_seed(c.seed, 1), c.dropout, pooling);
    history = train(model, corpus, c, observer);
    save_bvector(model, o.out);
    m.set("bvec_ops", o.bvec_ops);
    m.set("bvec_hidden", o.bvec_hidden);
    m.set("bvec_pooling", o.bvec_pooling);
  }

  m.set_seed(c.seed);
  m.set("backend", o.backend);
  m.set("loss", o.loss);
  m.set("epochs", static_cast<std::uint64_t>(c.epochs));
  m.set("batch_M", static_cast<std::uint64_t>(c.batch_M));
  m.set("H", static_cast<std::uint64_t>(c.hard_negative_H));
  m.set("lr0", c.lr0);
  m.set("dropout", c.dropout);
  m.set("weight_decay", c.weight_decay);
  m.set("strict_hardneg", c.strict_hardneg);
  m.set("paper_preset", o.paper_preset);
  m.add_input(o.in);
  m.add_output(o.out);
  if (!o.log.empty()) m.add_output(o.log);
  m.add_timing("total", clock.seconds());
  m.write(manifest_path(o.out));

  out << "trained " << history.size() << " epochs";
  if (!history.empty()) {
    out << ", final mean loss " << std::setprecision(6) << history.back().mean_loss;
  }
  out << "\n";
  return kExitOk;
}

struct ScoreOptions {
  std::string backend = "gat";
  std::string model;
  std::string trials;
  std::string in;
  std::string out;
};

int cmd_score(const ScoreOptions& o, std::ostream& out) {
  Stopwatch clock;
  Scorer scorer;
  scorer.kind = parse_backend(o.backend);
  if (scorer.kind == Backend::kGat || scorer.kind == Backend::kBVector) {
    if (o.model.empty()) throw ArgumentError("--model is required for backend " + o.backend);
    const std::string bytes = read_file_bytes(o.model);
    if (scorer.kind == Backend::kGat) {
      scorer.gat = decode_gat(bytes);
    } else {
      scorer.bvector = decode_bvector(bytes);
    }
  }
  const Corpus corpus = read_embeddings(o.in);
  const auto trials = read_trial_file(o.trials);
  const std::size_t threads = scoring_threads();
  const auto lines = score_trials(scorer, corpus, trials, threads);
  write_score_file(o.out, lines);

  Manifest m("score");
  m.set("backend", o.backend);
  m.set("threads", static_cast<std::uint64_t>(threads));
  if (!o.model.empty()) m.add_input(o.model);
  m.add_input(o.in);
  m.add_input(o.trials);
  m.add_output(o.out);
  m.add_timing("total", clock.seconds());
  m.write(manifest_path(o.out));
  out << "scored " << lines.size() << " trials\n";
  return kExitOk;
}

int cmd_eval(const std::string& scores_path, const std::string& det_path, std::ostream& out) {
  const TrialScores scores = to_trial_scores(read_score_file(scores_path));
  const EerResult r = eer(scores);
  std::ostringstream line;
  line << std::fixed << std::setprecision(2) << "EER " << 100.0 * r.eer << "%"
       << std::setprecision(6) << " threshold " << r.threshold << " (" << scores.target_count()
       << " target, " << scores.nontarget_count() << " nontarget)\n";
  out << line.str();
  if (!det_path.empty()) {
    std::ofstream det(det_path, std::ios::binary);
    if (!det) throw DataError("cannot open " + det_path + " for writing");
    det << std::setprecision(17);
    for (const DetPoint& p : det_points(scores)) det << p.far << ' ' << p.frr << ' ' << p.threshold << '\n';
  }
  return kExitOk;
}

struct GradcheckOptions {
  std::string dims = "8,8,4,2";
  std::uint64_t seed = 1;
  double tolerance = 1e-4;
  std::string sabotage;
};

int cmd_gradcheck(const GradcheckOptions& o, std::ostream& out) {
  const auto dims = parse_dims(o.dims);
  GradCheckOptions options;
  options.sabotage_op = o.sabotage;
  bool ok = true;
  const std::pair<const char*, GradTarget> targets[] = {{"score", GradTarget::kScore},
                                                        {"contrastive", GradTarget::kContrastive},
                                                        {"hardneg", GradTarget::kHardNegative}};
  for (const auto& [name, target] : targets) {
    const GradCheckReport r = check_gat_gradients(dims, o.seed, target, options);
    const bool pass = r.passed(o.tolerance);
    ok = ok && pass;
    out << std::left << std::setw(12) << name << (pass ? "ok  " : "FAIL") << " worst rel err "
        << std::scientific << std::setprecision(3) << r.worst_rel_err << " at " << r.worst_param
        << "[" << r.worst_index << "] (" << r.checked << " checked)\n"
        << std::defaultfloat;
  }
  return ok ? kExitOk : kExitCheckFailed;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph attention back-end for speaker verification", "gatsv"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic SSE corpus and trial list");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--seed", gen.synth.seed, "Generator seed");
  g->add_option("--speakers", gen.synth.speakers, "Total speakers")->capture_default_str();
  g->add_option("--test-speakers", gen.test_speakers, "Speakers held out for test")
      ->capture_default_str();
  g->add_option("--utterances", gen.synth.utterances_per_speaker, "Utterances per speaker")
      ->capture_default_str();
  g->add_option("--segments", gen.synth.segments_per_utterance, "Segments per utterance")
      ->capture_default_str();
  g->add_option("--dim", gen.synth.dim, "Embedding dimension")->capture_default_str();
  g->add_option("--within-noise", gen.synth.within_noise)->capture_default_str();
  g->add_option("--segment-noise", gen.synth.segment_noise)->capture_default_str();
  g->add_option("--outlier-prob", gen.synth.outlier_prob)->capture_default_str();
  g->add_option("--outlier-scale", gen.synth.outlier_scale)->capture_default_str();
  g->add_option("--targets", gen.targets, "Target trials")->capture_default_str();
  g->add_option("--nontargets", gen.nontargets, "Nontarget trials")->capture_default_str();

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train a GAT or b-vector scorer");
  t->add_option("--in", tr.in, "Training embeddings (SSEF1)")->required();
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--log", tr.log, "Loss log path (epoch, mean loss, lr)");
  t->add_option("--backend", tr.backend, "gat or bvector")->capture_default_str();
  t->add_option("--loss", tr.loss, "contrastive or hardneg")->capture_default_str();
  t->add_option("--H", tr.config.hard_negative_H, "Hard negatives per anchor")
      ->capture_default_str();
  t->add_option("--epochs", tr.config.epochs)->capture_default_str();
  t->add_option("--batch-M", tr.config.batch_M, "Speakers per batch")->capture_default_str();
  t->add_option("--dims", tr.dims, "Layer widths d0,d1,...,dK (default d,d,d/2,d/4)");
  t->add_option("--lr0", tr.config.lr0, "Initial learning rate")->capture_default_str();
  t->add_option("--dropout", tr.config.dropout, "Input dropout rate")->capture_default_str();
  t->add_option("--weight-decay", tr.config.weight_decay)->capture_default_str();
  t->add_option("--seed", tr.config.seed)->capture_default_str();
  t->add_flag("--paper-preset", tr.paper_preset,
              "epochs 200, batch-M 350, lr0 0.001, dropout 0.2, weight decay 1e-4");
  t->add_flag("--strict-hardneg", tr.config.strict_hardneg,
              "Leave the positive out of the hard-negative denominator");
  t->add_option("--bvec-ops", tr.bvec_ops, "b-vector feature ops")->capture_default_str();
  t->add_option("--bvec-hidden", tr.bvec_hidden, "b-vector hidden widths")->capture_default_str();
  t->add_option("--bvec-pooling", tr.bvec_pooling, "pairwise or mean")->capture_default_str();

  ScoreOptions sc;
  auto* s = app.add_subcommand("score", "Score a trial list");
  s->add_option("--backend", sc.backend, "gat, cosine, tta or bvector")->capture_default_str();
  s->add_option("--model", sc.model, "Checkpoint (gat, bvector)");
  s->add_option("--trials", sc.trials, "Trial list")->required();
  s->add_option("--in", sc.in, "Test embeddings (SSEF1)")->required();
  s->add_option("--out", sc.out, "Score file")->required();

  std::string scores_path, det_path;
  auto* e = app.add_subcommand("eval", "Report the EER of a score file");
  e->add_option("--scores", scores_path)->required();
  e->add_option("--det", det_path, "Write DET points (far frr threshold)");

  GradcheckOptions gc;
  auto* c = app.add_subcommand("gradcheck", "Compare taped and finite-difference gradients");
  c->add_option("--dims", gc.dims)->capture_default_str();
  c->add_option("--seed", gc.seed)->capture_default_str();
  c->add_option("--tolerance", gc.tolerance)->capture_default_str();
  c->add_option("--sabotage", gc.sabotage, "Corrupt the adjoint of this op (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*g) return cmd_gen(gen, out);
    if (*t) return cmd_train(tr, *t, out);
    if (*s) return cmd_score(sc, out);
    if (*e) return cmd_eval(scores_path, det_path, out);
    if (*c) return cmd_gradcheck(gc, out);
  } catch (const ArgumentError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const DataError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitData;
  } catch (const FormatError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitData;
  } catch (const DimensionError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitData;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitNumeric;
  } catch (const fs::filesystem_error& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"gatsv"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace gatsv::cli
