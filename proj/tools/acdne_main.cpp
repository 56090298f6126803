// acdne command-line tool: gen, train, predict, eval, export-embeddings.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "acdne/checkpoint.hpp"
#include "acdne/errors.hpp"
#include "acdne/evaluation.hpp"
#include "acdne/graph.hpp"
#include "acdne/model.hpp"
#include "acdne/synth.hpp"
#include "acdne/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { kOk = 0, kInvalid = 1, kDiverged = 2, kIoFailure = 3 };

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw acdne::IoError("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof(byte), "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

std::vector<int> parse_dims(const std::string& text, const char* flag, bool allow_empty) {
  std::vector<int> dims;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (field.empty()) continue;
    try {
      std::size_t used = 0;
      dims.push_back(std::stoi(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw acdne::ArgumentError(std::string(flag) + ": bad dimension list '" + text + "'");
    }
  }
  if (dims.empty() && !allow_empty) {
    throw acdne::ArgumentError(std::string(flag) + ": at least one dimension is required");
  }
  return dims;
}

acdne::AttributeFormat parse_format(const std::string& text) {
  if (text == "auto") return acdne::AttributeFormat::kAuto;
  if (text == "dense") return acdne::AttributeFormat::kDense;
  if (text == "sparse") return acdne::AttributeFormat::kSparse;
  throw acdne::ArgumentError("--attr-format must be auto, dense or sparse");
}

// Records input hashes, the resolved configuration and timing for one run.
class Manifest {
 public:
  explicit Manifest(std::string command)
      : start_(std::chrono::steady_clock::now()) {
    doc_["tool"] = "acdne";
    doc_["version"] = kVersion;
    doc_["command"] = std::move(command);
    doc_["inputs"] = json::array();
  }

  void add_input(const std::string& flag, const fs::path& path) {
    doc_["inputs"].push_back({{"flag", flag}, {"path", path.string()}, {"sha256", sha256_file(path)}});
  }
  json& operator[](const char* key) { return doc_[key]; }

  void write(const fs::path& path) {
    doc_["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw acdne::IoError("cannot write " + path.string());
    out << doc_.dump(2) << '\n';
    if (!out) throw acdne::IoError("write failed: " + path.string());
  }

 private:
  json doc_;
  std::chrono::steady_clock::time_point start_;
};

json config_json(const std::vector<std::pair<std::string, std::string>>& entries) {
  json j = json::object();
  for (const auto& [k, v] : entries) j[k] = v;
  return j;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw acdne::IoError("cannot create " + dir.string() + ": " + ec.message());
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string source_edges, source_attrs, source_labels;
  std::string target_edges, target_attrs, target_labels;
  std::string out;
  std::string label_mode = "multiclass";
  std::string attr_format = "auto";
  std::string variant = "full";
  std::string extractor_dims = "512,128";
  std::string discriminator_dims = "128,128";
  acdne::TrainConfig cfg;
  double lambda_max_override = -1;
  bool verbose = false;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* sub = app.add_subcommand("train", "Train on a labeled source and an unlabeled target network");
  sub->add_option("--source-edges", a.source_edges, "Source edge list")->required()->check(CLI::ExistingFile);
  sub->add_option("--source-attrs", a.source_attrs, "Source attribute file")->required()->check(CLI::ExistingFile);
  sub->add_option("--source-labels", a.source_labels, "Source label file")->required()->check(CLI::ExistingFile);
  sub->add_option("--target-edges", a.target_edges, "Target edge list")->required()->check(CLI::ExistingFile);
  sub->add_option("--target-attrs", a.target_attrs, "Target attribute file")->required()->check(CLI::ExistingFile);
  sub->add_option("--target-labels", a.target_labels,
                  "Optional target labels; used only to score the trained model")
      ->check(CLI::ExistingFile);
  sub->add_option("--out", a.out, "Output directory")->required();
  sub->add_option("--label-mode", a.label_mode, "multiclass or multilabel")->capture_default_str();
  sub->add_option("--attr-format", a.attr_format, "auto, dense or sparse")->capture_default_str();
  sub->add_option("--variant", a.variant,
                  "full, no-fe1, no-fe2, no-pairwise, no-classifier or no-discriminator")
      ->capture_default_str();
  sub->add_option("--seed", a.cfg.seed, "Random seed")->capture_default_str();
  sub->add_option("--epochs", a.cfg.epochs, "Passes over the larger network")->capture_default_str();
  sub->add_option("--mu0", a.cfg.initial_lr, "Initial learning rate (0.02 citation, 0.01 Blog-like)")
      ->capture_default_str();
  sub->add_option("--p-weight", a.cfg.pairwise_weight,
                  "Pairwise constraint weight (0.1 for sparse citation graphs, 1e-3 for dense Blog-like graphs)")
      ->capture_default_str();
  sub->add_option("--lambda-max-override", a.lambda_max_override,
                  "Scale of the domain-adaptation ramp; 0 disables the reversed gradient");
  sub->add_option("--steps", a.cfg.steps, "K for the PPMI proximity")->capture_default_str();
  sub->add_option("--extractor-dims", a.extractor_dims, "Hidden sizes of FE1/FE2")->capture_default_str();
  sub->add_option("--embedding-dim", a.cfg.embedding_dim, "Embedding size d")->capture_default_str();
  sub->add_option("--discriminator-dims", a.discriminator_dims, "Discriminator hidden sizes")
      ->capture_default_str();
  sub->add_option("--momentum", a.cfg.momentum, "SGD momentum")->capture_default_str();
  sub->add_option("--l2", a.cfg.l2_weight, "L2 weight on layer weights")->capture_default_str();
  sub->add_option("--batch-size", a.cfg.batch_size, "Batch size, half source and half target")
      ->capture_default_str();
  sub->add_option("--threshold", a.cfg.multilabel_threshold, "Multilabel decision threshold")
      ->capture_default_str();
  sub->add_flag("--verbose", a.verbose, "Print every epoch");
  sub->add_option("--config", "Flat key=value file; keys are long flag names without dashes");
}

std::string epoch_line(const acdne::EpochLog& e) {
  std::ostringstream s;
  s << "epoch " << e.epoch << " L_y=" << acdne::nn::format_double(e.classification_loss)
    << " L_p=" << acdne::nn::format_double(e.pairwise_loss)
    << " L_d=" << acdne::nn::format_double(e.domain_loss)
    << " mu=" << acdne::nn::format_double(e.learning_rate)
    << " lambda=" << acdne::nn::format_double(e.lambda)
    << " domain_acc=" << acdne::nn::format_double(e.domain_accuracy);
  return s.str();
}

int run_train(TrainArgs& a) {
  Manifest manifest("train");
  auto& cfg = a.cfg;
  cfg.label_mode = acdne::parse_label_mode(a.label_mode);
  cfg.variant = acdne::parse_variant(a.variant);
  cfg.extractor_dims = parse_dims(a.extractor_dims, "--extractor-dims", false);
  cfg.discriminator_dims = parse_dims(a.discriminator_dims, "--discriminator-dims", true);
  if (a.lambda_max_override >= 0) cfg.lambda_max = a.lambda_max_override;
  cfg.validate();

  acdne::LoadOptions opts;
  opts.label_mode = cfg.label_mode;
  opts.attribute_format = parse_format(a.attr_format);
  auto source = acdne::load_network(a.source_edges, a.source_attrs, fs::path(a.source_labels), opts);
  std::optional<fs::path> target_labels;
  if (!a.target_labels.empty()) target_labels = a.target_labels;
  auto target = acdne::load_network(a.target_edges, a.target_attrs, target_labels, opts);
  const auto pair = acdne::align_attributes(std::move(source), std::move(target));
  for (auto [flag, path] : {std::pair{"source-edges", &a.source_edges}, {"source-attrs", &a.source_attrs},
                            {"source-labels", &a.source_labels}, {"target-edges", &a.target_edges},
                            {"target-attrs", &a.target_attrs}}) {
    manifest.add_input(flag, *path);
  }
  if (target_labels) manifest.add_input("target-labels", *target_labels);

  const fs::path out(a.out);
  ensure_dir(out);
  const auto prepared = acdne::prepare_pair(pair, cfg.steps);
  const auto vocabulary = pair.source.attribute_names;
  acdne::TrainResult result;
  try {
    result = acdne::train(prepared, cfg);
  } catch (const acdne::TrainingDiverged& e) {
    acdne::nn::write_checkpoint(acdne::to_checkpoint(e.last_good(), cfg, vocabulary),
                                out / "last_good.ckpt");
    acdne::write_training_log(e.log(), out / "training_log.csv");
    std::cerr << "error: training diverged (" << e.what() << "); last good parameters in "
              << (out / "last_good.ckpt").string() << '\n';
    return kDiverged;
  }
  if (a.verbose) {
    for (const auto& e : result.log) std::cout << epoch_line(e) << '\n';
  }
  acdne::nn::write_checkpoint(acdne::to_checkpoint(result.params, cfg, vocabulary), out / "model.ckpt");
  acdne::write_training_log(result.log, out / "training_log.csv");

  manifest["seed"] = cfg.seed;
  manifest["config"] = config_json(acdne::config_entries(cfg));
  json outputs = {(out / "model.ckpt").string(), (out / "training_log.csv").string()};
  if (!result.log.empty()) {
    const auto& last = result.log.back();
    manifest["final_epoch"] = {{"epoch", last.epoch},
                               {"L_y", last.classification_loss},
                               {"L_p", last.pairwise_loss},
                               {"L_d", last.domain_loss},
                               {"domain_accuracy", last.domain_accuracy}};
  }
  if (prepared.target.labels) {
    const auto report = acdne::evaluate_transfer(result.params, prepared.target, cfg.multilabel_threshold);
    acdne::write_report(report, out / "report.kv");
    outputs.push_back((out / "report.kv").string());
    manifest["target_micro_f1"] = report.micro_f1;
    manifest["target_macro_f1"] = report.macro_f1;
    std::cout << report.to_text();
  }
  manifest["outputs"] = outputs;
  manifest.write(out / "manifest.json");
  if (!result.log.empty()) std::cout << epoch_line(result.log.back()) << '\n';
  return kOk;
}

// ------------------------------------------------- predict / export-embeddings

struct ApplyArgs {
  std::string model, edges, attrs, out;
  std::string attr_format = "auto";
  double threshold = -1;
};

void add_apply_options(CLI::App* sub, ApplyArgs& a, const char* out_help) {
  sub->add_option("--model", a.model, "Checkpoint written by train")->required()->check(CLI::ExistingFile);
  sub->add_option("--edges", a.edges, "Edge list of the network")->required()->check(CLI::ExistingFile);
  sub->add_option("--attrs", a.attrs, "Attribute file of the network")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", a.out, out_help)->required();
  sub->add_option("--attr-format", a.attr_format, "auto, dense or sparse")->capture_default_str();
  sub->add_option("--config", "Flat key=value file; keys are long flag names without dashes");
}

struct Applied {
  acdne::LoadedModel model;
  acdne::PreparedNetwork network;
};

Applied load_for_apply(const ApplyArgs& a) {
  Applied out;
  out.model = acdne::from_checkpoint(acdne::nn::read_checkpoint(a.model));
  acdne::LoadOptions opts;
  opts.attribute_format = parse_format(a.attr_format);
  opts.label_mode = out.model.config.label_mode;
  auto net = acdne::load_network(a.edges, a.attrs, std::nullopt, opts);
  if (!out.model.vocabulary.empty()) {
    if (net.attribute_names.empty()) {
      throw acdne::ValidationError("the model was trained on named attributes; --attrs has no header");
    }
    acdne::reindex_attributes(net, out.model.vocabulary);
  } else if (net.attribute_dim() != out.model.params.attribute_dim()) {
    throw acdne::ValidationError("--attrs has " + std::to_string(net.attribute_dim()) +
                                 " columns but the model expects " +
                                 std::to_string(out.model.params.attribute_dim()));
  }
  out.network = acdne::prepare_network(net, out.model.config.steps);
  return out;
}

int run_predict(const ApplyArgs& a) {
  Manifest manifest("predict");
  const auto applied = load_for_apply(a);
  const double threshold = a.threshold >= 0 ? a.threshold : applied.model.config.multilabel_threshold;
  const acdne::Matrix labels = acdne::predict(applied.model.params, applied.network.attributes,
                                              applied.network.neighbors, threshold);
  const fs::path out(a.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  acdne::write_label_sets(acdne::label_sets(labels), out);
  manifest.add_input("model", a.model);
  manifest.add_input("edges", a.edges);
  manifest.add_input("attrs", a.attrs);
  manifest["threshold"] = threshold;
  manifest["outputs"] = {out.string()};
  manifest.write(fs::path(out.string() + ".manifest.json"));
  return kOk;
}

int run_export(const ApplyArgs& a) {
  Manifest manifest("export-embeddings");
  const auto applied = load_for_apply(a);
  const fs::path out(a.out);
  if (out.has_parent_path()) ensure_dir(out.parent_path());
  acdne::export_embeddings(applied.model.params, applied.network, out);
  manifest.add_input("model", a.model);
  manifest.add_input("edges", a.edges);
  manifest.add_input("attrs", a.attrs);
  manifest["outputs"] = {out.string()};
  manifest.write(fs::path(out.string() + ".manifest.json"));
  return kOk;
}

// ----------------------------------------------------------------- eval

struct EvalArgs {
  std::string predictions, truth, out;
  std::string label_mode = "multiclass";
};

int run_eval(const EvalArgs& a) {
  const auto mode = acdne::parse_label_mode(a.label_mode);
  const auto predicted = acdne::read_label_sets(a.predictions);
  const auto truth = acdne::read_label_sets(a.truth);
  int nodes = 0;
  int classes = 0;
  for (const auto* sets : {&predicted, &truth}) {
    for (const auto& [node, cats] : *sets) {
      nodes = std::max(nodes, node + 1);
      for (int k : cats) classes = std::max(classes, k + 1);
    }
  }
  // Score exactly the nodes listed in the truth file.
  acdne::LabelSets pred_on_truth;
  acdne::LabelSets truth_rows;
  int row = 0;
  for (const auto& [node, cats] : truth) {
    truth_rows[row] = cats;
    auto found = predicted.find(node);
    pred_on_truth[row] = found == predicted.end() ? std::vector<int>{} : found->second;
    ++row;
  }
  // Rows without a prediction are legal here, so build indicators directly.
  auto indicators = [&](const acdne::LabelSets& sets) {
    acdne::Matrix m = acdne::Matrix::Zero(row, classes);
    for (const auto& [r, cats] : sets) {
      for (int k : cats) m(r, k) = 1.0;
    }
    return m;
  };
  const acdne::Matrix t = indicators(truth_rows);
  if (mode == acdne::LabelMode::kMulticlass) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      if (t.row(r).sum() != 1.0) {
        throw acdne::ValidationError("--truth: multiclass nodes need exactly one label");
      }
    }
  }
  const auto report = acdne::f1_scores(indicators(pred_on_truth), t);
  std::cout << report.to_text();
  if (!a.out.empty()) {
    const fs::path out(a.out);
    if (out.has_parent_path()) ensure_dir(out.parent_path());
    acdne::write_report(report, out);
  }
  return kOk;
}

// ------------------------------------------------------------------ gen

struct GenArgs {
  acdne::SynthSpec spec;
  double target_p_in = -1;
  double target_p_out = -1;
  std::string out;
};

int run_gen(GenArgs& a) {
  Manifest manifest("gen");
  if (a.target_p_in >= 0) a.spec.target_p_in = a.target_p_in;
  if (a.target_p_out >= 0) a.spec.target_p_out = a.target_p_out;
  const auto pair = acdne::generate_pair(a.spec);
  const fs::path out(a.out);
  acdne::write_pair(pair, out);
  const auto& s = a.spec;
  manifest["seed"] = s.seed;
  manifest["config"] = {{"n_source", s.n_source},       {"n_target", s.n_target},
                        {"classes", s.classes},         {"attribute_dim", s.attribute_dim},
                        {"p_in", s.p_in},               {"p_out", s.p_out},
                        {"target_p_in", s.target_p_in.value_or(s.p_in)},
                        {"target_p_out", s.target_p_out.value_or(s.p_out)},
                        {"signal", s.signal},           {"background", s.background},
                        {"flip_rate", s.flip_rate}};
  manifest.write(out / "manifest.json");
  return kOk;
}

// Expands `--config FILE` into `--key=value` arguments placed straight
// after the subcommand name, so explicit flags given later win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string file;
    std::size_t consumed = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      file = args[i + 1];
      consumed = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
      consumed = 1;
    } else {
      continue;
    }
    if (!fs::exists(file)) throw CLI::ValidationError("--config", "file not found: " + file);
    std::vector<std::string> injected;
    for (const auto& item : CLI::ConfigINI().from_file(file)) {
      if (item.name == "++" || item.name == "--" || item.name.empty()) continue;
      std::string key = item.name;
      std::replace(key.begin(), key.end(), '_', '-');
      std::string value;
      for (std::size_t k = 0; k < item.inputs.size(); ++k) value += (k ? "," : "") + item.inputs[k];
      injected.push_back("--" + key + "=" + value);
    }
    args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i + consumed));
    const auto at = args.empty() ? args.begin() : args.begin() + 1;
    args.insert(at, injected.begin(), injected.end());
    i = injected.size();
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adversarial cross-network node classification"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  TrainArgs train_args;
  add_train(app, train_args);

  ApplyArgs predict_args;
  auto* predict = app.add_subcommand("predict", "Write predicted labels for a network");
  add_apply_options(predict, predict_args, "Output label file");
  predict->add_option("--threshold", predict_args.threshold,
                      "Multilabel threshold; defaults to the value stored in the model");

  ApplyArgs export_args;
  auto* exporter = app.add_subcommand("export-embeddings", "Write node embeddings for a network");
  add_apply_options(exporter, export_args, "Output embedding file");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Score a label file against ground truth");
  eval->add_option("--predictions", eval_args.predictions, "Predicted label file")->required()->check(CLI::ExistingFile);
  eval->add_option("--truth", eval_args.truth, "Ground-truth label file")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", eval_args.out, "Optional key=value report file");
  eval->add_option("--label-mode", eval_args.label_mode, "multiclass or multilabel")->capture_default_str();
  eval->add_option("--config", "Flat key=value file; keys are long flag names without dashes");

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic source/target pair");
  auto& s = gen_args.spec;
  gen->add_option("--out", gen_args.out, "Output directory")->required();
  gen->add_option("--seed", s.seed, "Random seed")->capture_default_str();
  gen->add_option("--n-source", s.n_source, "Source nodes")->capture_default_str();
  gen->add_option("--n-target", s.n_target, "Target nodes")->capture_default_str();
  gen->add_option("--classes", s.classes, "Class count")->capture_default_str();
  gen->add_option("--attribute-dim", s.attribute_dim, "Attribute columns")->capture_default_str();
  gen->add_option("--p-in", s.p_in, "Within-class edge probability")->capture_default_str();
  gen->add_option("--p-out", s.p_out, "Across-class edge probability")->capture_default_str();
  gen->add_option("--target-p-in", gen_args.target_p_in, "Target within-class edge probability");
  gen->add_option("--target-p-out", gen_args.target_p_out, "Target across-class edge probability");
  gen->add_option("--signal", s.signal, "Own-block attribute probability")->capture_default_str();
  gen->add_option("--background", s.background, "Other-block attribute probability")->capture_default_str();
  gen->add_option("--flip-rate", s.flip_rate, "Fraction of target attribute cells flipped")->capture_default_str();
  gen->add_option("--config", "Flat key=value file; keys are long flag names without dashes");

  try {
    auto args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  try {
    if (app.got_subcommand("train")) return run_train(train_args);
    if (app.got_subcommand("predict")) return run_predict(predict_args);
    if (app.got_subcommand("export-embeddings")) return run_export(export_args);
    if (app.got_subcommand("eval")) return run_eval(eval_args);
    if (app.got_subcommand("gen")) return run_gen(gen_args);
  } catch (const acdne::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const acdne::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  }
  return kInvalid;
}
