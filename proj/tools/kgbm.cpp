#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "kgbm/ensemble.hpp"
#include "kgbm/eval.hpp"
#include "kgbm/kb.hpp"
#include "kgbm/models.hpp"
#include "kgbm/training.hpp"
#include "kgbm/transforms.hpp"

namespace {

constexpr const char* kToolVersion = "kgbm 1.0.0";

// exit codes: 0 success, 1 verification/assertion failure, 2 usage, 3 I/O
constexpr int kExitSuccess = 0;
constexpr int kExitVerificationFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

namespace fs = std::filesystem;
using namespace kgbm;

struct DatasetPaths {
  std::string train, valid, test;

  static DatasetPaths from_dir(const std::string& dir) {
    DatasetPaths p;
    p.train = (fs::path(dir) / "train.txt").string();
    p.valid = (fs::path(dir) / "valid.txt").string();
    p.test = (fs::path(dir) / "test.txt").string();
    return p;
  }
};

uint64_t dataset_checksum(const DatasetPaths& p) {
  uint64_t h = 1469598103934665603ull;
  h = fnv1a_combine(h, fnv1a_file(p.train));
  h = fnv1a_combine(h, fnv1a_file(p.valid));
  h = fnv1a_combine(h, fnv1a_file(p.test));
  return h;
}

uint64_t default_seed() {
  if (const char* env = std::getenv("KGB_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::logic_error&) {
      std::cerr << "warning: ignoring non-numeric KGB_SEED\n";
    }
  }
  return 0;
}

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

void write_manifest(const std::string& artifact_path, const std::string& command_line,
                    uint64_t seed, const std::string& data_checksum, const KvList& config,
                    double wall_seconds) {
  KvList kv;
  kv.emplace_back("tool", kToolVersion);
  kv.emplace_back("command", command_line);
  kv.emplace_back("seed", std::to_string(seed));
  kv.emplace_back("dataset_checksum", data_checksum);
  for (const auto& [k, v] : config) kv.emplace_back("config." + k, v);
  std::ostringstream secs;
  secs << wall_seconds;
  kv.emplace_back("wall_clock_seconds", secs.str());
  write_kv_file_atomic(artifact_path + ".manifest", kv);
}

void print_kv(const KvList& kv, const std::string& prefix = "") {
  for (const auto& [k, v] : kv) std::cout << prefix << k << "=" << v << "\n";
}

// --- train -------------------------------------------------------------------

struct TrainArgs {
  std::string data_dir, out_path, config_path;
  std::string model = "transe";
  int dim = 100;
  double margin = 1.0, lr = 0.1, lambda_e = 0.0, lambda_r = 0.0;
  int epochs = kFinalTrainEpochs;
  uint64_t seed = 0;
  int negatives = 1;
};

int run_train(const TrainArgs& a, const CLI::App* cmd, const std::string& command_line) {
  TrainConfig cfg;
  if (!a.config_path.empty()) cfg = TrainConfig::from_kv(read_kv_file(a.config_path));

  auto flag_given = [&](const char* name) { return cmd->count(name) > 0; };
  if (a.config_path.empty() || flag_given("--model")) cfg.model = model_kind_from_string(a.model);
  if (a.config_path.empty() || flag_given("--dim")) cfg.dim = a.dim;
  if (a.config_path.empty() || flag_given("--margin")) cfg.margin = a.margin;
  if (a.config_path.empty() || flag_given("--lr")) cfg.learning_rate = a.lr;
  if (a.config_path.empty() || flag_given("--lambda-e")) cfg.lambda_entity = a.lambda_e;
  if (a.config_path.empty() || flag_given("--lambda-r")) cfg.lambda_relation = a.lambda_r;
  if (a.config_path.empty() || flag_given("--epochs")) cfg.epochs = a.epochs;
  if (a.config_path.empty() || flag_given("--seed")) cfg.seed = a.seed;
  if (a.config_path.empty() || flag_given("--negatives"))
    cfg.negatives_per_positive = a.negatives;
  cfg.validate();

  auto t0 = std::chrono::steady_clock::now();
  DatasetPaths paths = DatasetPaths::from_dir(a.data_dir);
  KnowledgeBase kb = KnowledgeBase::load(paths.train, paths.valid, paths.test);
  std::cerr << "loaded KB: " << kb.num_entities() << " entities, " << kb.num_relations()
            << " relations, " << kb.train().size() << "/" << kb.valid().size() << "/"
            << kb.test().size() << " triples\n";

  TrainResult res = train(kb, cfg);
  for (size_t e = 0; e < res.epoch_mean_loss.size(); ++e) {
    if ((e + 1) % 10 == 0 || e + 1 == res.epoch_mean_loss.size()) {
      std::cerr << "epoch " << (e + 1) << ": mean loss " << res.epoch_mean_loss[e] << "\n";
    }
  }

  const std::string checksum = to_hex(dataset_checksum(paths));
  KvList sidecar = cfg.to_kv();
  sidecar.emplace_back("dataset_checksum", checksum);
  save_model(a.out_path, res.params, sidecar);

  fs::path out_dir = fs::path(a.out_path).parent_path();
  kb.write_dictionaries(out_dir.empty() ? "." : out_dir.string());

  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(a.out_path, command_line, cfg.seed, checksum, cfg.to_kv(), secs);
  std::cout << "model written to " << a.out_path << "\n";
  return kExitSuccess;
}

// --- eval ---------------------------------------------------------------------

struct EvalArgs {
  std::string data_dir, model_file;
  std::string split = "test";
  int threads = 1;
};

int run_eval(const EvalArgs& a) {
  DatasetPaths paths = DatasetPaths::from_dir(a.data_dir);
  KnowledgeBase kb = KnowledgeBase::load(paths.train, paths.valid, paths.test);
  ModelParams m = load_model(a.model_file);
  if (num_entities(m) != kb.num_entities() || num_relations(m) != kb.num_relations()) {
    throw std::invalid_argument("model/dataset dimension mismatch");
  }
  const std::vector<Triple>& split = a.split == "valid" ? kb.valid() : kb.test();
  ModelScorer scorer(m);
  MetricsSummary ms = evaluate_ranking(scorer, kb, split, a.threads);
  std::cout << ms.to_table() << "\n";
  print_kv(ms.to_kv());
  return kExitSuccess;
}

// --- classify --------------------------------------------------------------------

struct ClassifyArgs {
  std::string data_dir, model_file, sets_dir;
  uint64_t seed = 0;
};

int run_classify(const ClassifyArgs& a, const std::string& command_line) {
  DatasetPaths paths = DatasetPaths::from_dir(a.data_dir);
  KnowledgeBase kb = KnowledgeBase::load(paths.train, paths.valid, paths.test);
  if (kb.valid().empty()) {
    throw std::invalid_argument("classify: missing validation split");
  }
  ModelParams m = load_model(a.model_file);
  if (num_entities(m) != kb.num_entities() || num_relations(m) != kb.num_relations()) {
    throw std::invalid_argument("model/dataset dimension mismatch");
  }

  // The labeled sets are generated once with a fixed seed and persisted, so
  // every model is scored against identical negatives.
  const fs::path dir = a.sets_dir.empty() ? fs::path(a.data_dir) : fs::path(a.sets_dir);
  fs::create_directories(dir);
  const std::string valid_path =
      (dir / ("classification.valid.seed" + std::to_string(a.seed) + ".tsv")).string();
  const std::string test_path =
      (dir / ("classification.test.seed" + std::to_string(a.seed) + ".tsv")).string();

  TripleIndex known(kb, TripleIndex::Scope::AllSplits);
  std::vector<LabeledTriple> valid_set, test_set;
  if (fs::exists(valid_path) && fs::exists(test_path)) {
    valid_set = read_classification_tsv(kb, valid_path);
    test_set = read_classification_tsv(kb, test_path);
    std::cerr << "reusing classification sets in " << dir.string() << "\n";
  } else {
    auto t0 = std::chrono::steady_clock::now();
    valid_set = build_classification_set(kb, kb.valid(), known, a.seed);
    test_set = build_classification_set(kb, kb.test(), known, a.seed + 1);
    write_classification_tsv(kb, valid_path, valid_set);
    write_classification_tsv(kb, test_path, test_set);
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(test_path, command_line, a.seed, to_hex(dataset_checksum(paths)),
                   {{"sets", "classification valid+test"}}, secs);
  }

  ModelScorer scorer(m);
  ThresholdTable thresholds = select_thresholds(scorer, valid_set);
  double acc = classify_triples(scorer, thresholds, test_set);

  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", acc * 100.0);
  std::cout << "triple classification accuracy: " << buf << "%\n";
  std::cout << "accuracy=" << buf << "\n";
  return kExitSuccess;
}

// --- ensemble ---------------------------------------------------------------------

struct EnsembleArgs {
  std::string data_dir, out_path, ensemble_file;
  std::vector<std::string> model_files;
  std::string split = "test";
  uint64_t seed = 0;
  double reg = 1.0;
  int threads = 1;
};

// Tab-style combination label, e.g. R+H+T for rescal, hole, transe.
std::string combination_label(const std::vector<ModelParams>& models) {
  std::string s;
  for (const ModelParams& m : models) {
    const char* letter = "?";
    switch (kind_of(m)) {
      case ModelKind::Rescal: letter = "R"; break;
      case ModelKind::Distmult: letter = "D"; break;
      case ModelKind::HolE: letter = "H"; break;
      case ModelKind::Complex: letter = "C"; break;
      case ModelKind::TransE: letter = "T"; break;
    }
    if (!s.empty()) s += "+";
    s += letter;
  }
  return s;
}

std::vector<ModelParams> load_base_models(const EnsembleArgs& a, const DatasetPaths& paths,
                                          const KnowledgeBase& kb) {
  if (a.model_files.size() < 2) {
    throw std::invalid_argument("ensemble: need at least 2 model files");
  }
  const std::string expect = to_hex(dataset_checksum(paths));
  std::vector<ModelParams> models;
  for (const std::string& f : a.model_files) {
    KvMap meta = load_model_sidecar(f);
    auto it = meta.find("dataset_checksum");
    if (it == meta.end() || it->second != expect) {
      throw std::invalid_argument("ensemble: dataset checksum mismatch for " + f);
    }
    ModelParams m = load_model(f);
    if (num_entities(m) != kb.num_entities() || num_relations(m) != kb.num_relations()) {
      throw std::invalid_argument("model/dataset dimension mismatch for " + f);
    }
    models.push_back(std::move(m));
  }
  return models;
}

int run_ensemble_train(const EnsembleArgs& a, const std::string& command_line) {
  auto t0 = std::chrono::steady_clock::now();
  DatasetPaths paths = DatasetPaths::from_dir(a.data_dir);
  KnowledgeBase kb = KnowledgeBase::load(paths.train, paths.valid, paths.test);
  std::vector<ModelParams> models = load_base_models(a, paths, kb);

  std::vector<ModelScorer> scorers;
  scorers.reserve(models.size());
  for (const ModelParams& m : models) scorers.emplace_back(m);
  std::vector<const Scorer*> base;
  std::vector<std::string> ids;
  for (size_t i = 0; i < scorers.size(); ++i) {
    base.push_back(&scorers[i]);
    ids.push_back(fs::path(a.model_files[i]).filename().string());
  }

  RelationEnsemble ens = train_ensemble(kb, base, ids, a.seed, a.reg, a.threads);
  ens.save(a.out_path);

  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const std::string label = combination_label(models);
  KvList cfg{{"models", std::to_string(models.size())},
             {"combination", label},
             {"reg", std::to_string(a.reg)}};
  write_manifest(a.out_path, command_line, a.seed, to_hex(dataset_checksum(paths)), cfg,
                 secs);
  std::cout << "ensemble " << label << " written to " << a.out_path << " ("
            << ens.relations.size() << " relation entries, fallback model "
            << ens.fallback_model << ")\n";
  std::cout << "combination=" << label << "\n";
  return kExitSuccess;
}

int run_ensemble_eval(const EnsembleArgs& a) {
  DatasetPaths paths = DatasetPaths::from_dir(a.data_dir);
  KnowledgeBase kb = KnowledgeBase::load(paths.train, paths.valid, paths.test);
  std::vector<ModelParams> models = load_base_models(a, paths, kb);
  RelationEnsemble ens = RelationEnsemble::load(a.ensemble_file);
  if (ens.model_ids.size() != models.size()) {
    throw std::invalid_argument("ensemble: expected " +
                                std::to_string(ens.model_ids.size()) + " model files");
  }

  std::vector<ModelScorer> scorers;
  scorers.reserve(models.size());
  for (const ModelParams& m : models) scorers.emplace_back(m);
  std::vector<const Scorer*> base;
  for (size_t i = 0; i < scorers.size(); ++i) {
    std::string given = fs::path(a.model_files[i]).filename().string();
    if (given != ens.model_ids[i]) {
      std::cerr << "warning: model " << i << " was trained as `" << ens.model_ids[i]
                << "`, got `" << given << "`\n";
    }
    base.push_back(&scorers[i]);
  }

  EnsembleScorer scorer(ens, base);
  const std::vector<Triple>& split = a.split == "valid" ? kb.valid() : kb.test();
  MetricsSummary ms = evaluate_ranking(scorer, kb, split, a.threads);
  std::cout << "ensemble " << combination_label(models) << "\n";
  std::cout << ms.to_table() << "\n";
  std::cout << "combination=" << combination_label(models) << "\n";
  print_kv(ms.to_kv());
  return kExitSuccess;
}

// --- verify -------------------------------------------------------------------------

struct VerifyArgs {
  std::string theorem = "all";
  int trials = 100;
  int max_n = 8;
  int max_r = 4;
  int max_k = 3;
  uint64_t seed = 20170301;
};

int run_verify(const VerifyArgs& a) {
  VerifyOptions opt;
  opt.trials = a.trials;
  opt.max_entities = a.max_n;
  opt.max_dim = a.max_r;
  opt.max_relations = a.max_k;
  opt.seed = a.seed;

  if (a.trials == 0) {
    std::cerr << "warning: 0 trials requested; verification is vacuous\n";
  }

  std::vector<TransformReport> reports;
  if (a.theorem == "all") {
    reports = verify_all(opt);
  } else if (a.theorem == "transe-to-rescal") {
    reports.push_back(verify_transe_to_rescal(opt));
  } else if (a.theorem == "hole-to-rescal") {
    reports.push_back(verify_hole_to_rescal(opt));
  } else if (a.theorem == "distmult-to-rescal") {
    reports.push_back(verify_distmult_to_rescal(opt));
  } else if (a.theorem == "complex-to-rescal") {
    reports.push_back(verify_complex_to_rescal(opt));
  } else if (a.theorem == "universal") {
    reports.push_back(verify_rescal_universal(opt));
  } else if (a.theorem == "consistent") {
    reports.push_back(verify_rescal_consistent(opt));
  } else if (a.theorem == "complex-consistent") {
    reports.push_back(verify_complex_consistent(opt));
  } else if (a.theorem == "obstructions") {
    reports.push_back(verify_obstructions(opt));
  } else {
    throw std::invalid_argument("unknown theorem: " + a.theorem);
  }

  bool all_passed = true;
  for (const TransformReport& rep : reports) {
    std::cout << rep.to_text() << "\n";
    print_kv(rep.to_kv(), rep.name + ".");
    std::cout << "\n";
    all_passed = all_passed && rep.passed;
  }
  return all_passed ? kExitSuccess : kExitVerificationFailure;
}

// --- transform -------------------------------------------------------------------------

struct TransformArgs {
  std::string theorem, in_path, out_path;
};

int run_transform(const TransformArgs& a, const std::string& command_line) {
  auto t0 = std::chrono::steady_clock::now();
  ModelParams m = load_model(a.in_path);
  ModelParams out;

  if (a.theorem == "transe-to-rescal") {
    if (kind_of(m) != ModelKind::TransE)
      throw std::invalid_argument("transe-to-rescal expects a transe model file");
    out = transe_to_rescal(std::get<TransEParams>(m));
  } else if (a.theorem == "hole-to-rescal") {
    if (kind_of(m) != ModelKind::HolE)
      throw std::invalid_argument("hole-to-rescal expects a hole model file");
    out = hole_to_rescal(std::get<HolEParams>(m));
  } else if (a.theorem == "distmult-to-rescal") {
    if (kind_of(m) != ModelKind::Distmult)
      throw std::invalid_argument("distmult-to-rescal expects a distmult model file");
    out = distmult_to_rescal(std::get<DistmultParams>(m));
  } else if (a.theorem == "complex-to-rescal") {
    if (kind_of(m) != ModelKind::Complex)
      throw std::invalid_argument("complex-to-rescal expects a complex model file");
    out = complex_to_rescal(std::get<ComplexParams>(m));
  } else {
    throw std::invalid_argument("unknown transform: " + a.theorem);
  }

  KvList sidecar{{"transformed_from", a.in_path}, {"transform", a.theorem}};
  try {
    KvMap meta = load_model_sidecar(a.in_path);
    if (auto it = meta.find("dataset_checksum"); it != meta.end()) {
      sidecar.emplace_back("dataset_checksum", it->second);
    }
  } catch (const IoError&) {
    // no sidecar on the input model; nothing to carry over
  }
  save_model(a.out_path, out, sidecar);

  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(a.out_path, command_line, 0, "", sidecar, secs);
  std::cout << "wrote " << to_string(kind_of(out)) << " model (size " << dim(out)
            << ") to " << a.out_path << "\n";
  return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bilinear knowledge-graph embedding toolkit"};
  app.require_subcommand(1);
  const std::string command_line = join_args(argc, argv);
  const uint64_t env_seed = default_seed();

  TrainArgs train_args;
  train_args.seed = env_seed;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--data", train_args.data_dir,
                        "dataset directory with train.txt/valid.txt/test.txt")
      ->required();
  train_cmd->add_option("--out", train_args.out_path, "output model file")->required();
  train_cmd->add_option("--config", train_args.config_path, "key = value config file");
  train_cmd->add_option("--model", train_args.model,
                        "rescal|distmult|hole|complex|transe");
  train_cmd->add_option("--dim", train_args.dim, "embedding size r");
  train_cmd->add_option("--margin", train_args.margin, "margin gamma");
  train_cmd->add_option("--lr", train_args.lr, "Adagrad learning rate");
  train_cmd->add_option("--lambda-e", train_args.lambda_e, "entity L2 weight");
  train_cmd->add_option("--lambda-r", train_args.lambda_r, "relation L2 weight");
  train_cmd->add_option("--epochs", train_args.epochs, "training epochs");
  train_cmd->add_option("--seed", train_args.seed, "random seed (default KGB_SEED)");
  train_cmd->add_option("--negatives", train_args.negatives, "negatives per positive");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "filtered entity-ranking metrics");
  eval_cmd->add_option("--data", eval_args.data_dir, "dataset directory")->required();
  eval_cmd->add_option("--model-file", eval_args.model_file, "KGBM model file")->required();
  eval_cmd->add_option("--split", eval_args.split, "test|valid")
      ->check(CLI::IsMember({"test", "valid"}));
  eval_cmd->add_option("--threads", eval_args.threads, "worker threads");

  ClassifyArgs classify_args;
  classify_args.seed = env_seed;
  CLI::App* classify_cmd = app.add_subcommand("classify", "triple classification accuracy");
  classify_cmd->add_option("--data", classify_args.data_dir, "dataset directory")
      ->required();
  classify_cmd->add_option("--model-file", classify_args.model_file, "KGBM model file")
      ->required();
  classify_cmd->add_option("--sets-dir", classify_args.sets_dir,
                           "directory for persisted classification sets");
  classify_cmd->add_option("--seed", classify_args.seed, "negative-sampling seed");

  EnsembleArgs ens_args;
  ens_args.seed = env_seed;
  CLI::App* ens_cmd = app.add_subcommand("ensemble", "relation-level stacking");
  ens_cmd->require_subcommand(1);
  CLI::App* ens_train = ens_cmd->add_subcommand("train", "fit the per-relation ensemble");
  ens_train->add_option("--data", ens_args.data_dir, "dataset directory")->required();
  ens_train->add_option("--models", ens_args.model_files, "base model files")
      ->required()
      ->delimiter(',');
  ens_train->add_option("--out", ens_args.out_path, "output ensemble file")->required();
  ens_train->add_option("--seed", ens_args.seed, "meta-dataset sampling seed");
  ens_train->add_option("--reg", ens_args.reg, "logistic regression L2 strength");
  ens_train->add_option("--threads", ens_args.threads, "worker threads");
  CLI::App* ens_eval = ens_cmd->add_subcommand("eval", "evaluate a stored ensemble");
  ens_eval->add_option("--data", ens_args.data_dir, "dataset directory")->required();
  ens_eval->add_option("--ensemble", ens_args.ensemble_file, "ensemble file")->required();
  ens_eval->add_option("--models", ens_args.model_files, "base model files")
      ->required()
      ->delimiter(',');
  ens_eval->add_option("--split", ens_args.split, "test|valid")
      ->check(CLI::IsMember({"test", "valid"}));
  ens_eval->add_option("--threads", ens_args.threads, "worker threads");

  VerifyArgs verify_args;
  CLI::App* verify_cmd = app.add_subcommand("verify", "run theorem verifications");
  verify_cmd->add_option("--theorem", verify_args.theorem,
                         "transe-to-rescal|hole-to-rescal|distmult-to-rescal|"
                         "complex-to-rescal|universal|consistent|complex-consistent|"
                         "obstructions|all");
  verify_cmd->add_option("--trials", verify_args.trials, "number of random trials");
  verify_cmd->add_option("--n", verify_args.max_n, "max entity count");
  verify_cmd->add_option("--r", verify_args.max_r, "max embedding size");
  verify_cmd->add_option("--k", verify_args.max_k, "max relation count");
  verify_cmd->add_option("--seed", verify_args.seed, "base seed");

  TransformArgs transform_args;
  CLI::App* transform_cmd =
      app.add_subcommand("transform", "convert a model file between families");
  transform_cmd
      ->add_option("--theorem", transform_args.theorem,
                   "transe-to-rescal|hole-to-rescal|distmult-to-rescal|complex-to-rescal")
      ->required();
  transform_cmd->add_option("--in", transform_args.in_path, "input model file")->required();
  transform_cmd->add_option("--out", transform_args.out_path, "output model file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitSuccess : kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return run_train(train_args, train_cmd, command_line);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (classify_cmd->parsed()) return run_classify(classify_args, command_line);
    if (ens_cmd->parsed()) {
      if (ens_train->parsed()) return run_ensemble_train(ens_args, command_line);
      return run_ensemble_eval(ens_args);
    }
    if (verify_cmd->parsed()) return run_verify(verify_args);
    if (transform_cmd->parsed()) return run_transform(transform_args, command_line);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitVerificationFailure;
  }
  return kExitUsage;
}
