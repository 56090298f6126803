#include "acdne/evaluation.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "acdne/errors.hpp"

namespace acdne {

namespace {

double f1_from(long tp, long fp, long fn) {
  const long denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
}

}  // namespace

std::string EvalReport::to_text() const {
  std::ostringstream out;
  out << "nodes evaluated: " << n_evaluated << '\n';
  out << "Micro-F1: " << micro_f1 << '\n';
  out << "Macro-F1: " << macro_f1 << '\n';
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    const auto& c = per_class[k];
    out << "  class " << k << ": tp=" << c.tp << " fp=" << c.fp << " fn=" << c.fn
        << " f1=" << c.f1 << '\n';
  }
  return out.str();
}

std::string EvalReport::to_key_values() const {
  std::ostringstream out;
  out << "micro_f1=" << nn::format_double(micro_f1) << '\n';
  out << "macro_f1=" << nn::format_double(macro_f1) << '\n';
  out << "n_evaluated=" << n_evaluated << '\n';
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    const auto& c = per_class[k];
    out << "class_" << k << "_tp=" << c.tp << '\n';
    out << "class_" << k << "_fp=" << c.fp << '\n';
    out << "class_" << k << "_fn=" << c.fn << '\n';
    out << "class_" << k << "_f1=" << nn::format_double(c.f1) << '\n';
  }
  return out.str();
}

EvalReport f1_scores(const Matrix& predicted, const Matrix& truth) {
  if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols()) {
    throw ArgumentError("prediction matrix is " + std::to_string(predicted.rows()) + "x" +
                        std::to_string(predicted.cols()) + ", ground truth is " +
                        std::to_string(truth.rows()) + "x" + std::to_string(truth.cols()));
  }
  EvalReport report;
  report.n_evaluated = truth.rows();
  report.per_class.resize(static_cast<std::size_t>(truth.cols()));
  long tp = 0;
  long fp = 0;
  long fn = 0;
  for (Eigen::Index k = 0; k < truth.cols(); ++k) {
    auto& c = report.per_class[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < truth.rows(); ++i) {
      const bool p = predicted(i, k) != 0.0;
      const bool t = truth(i, k) != 0.0;
      c.tp += p && t;
      c.fp += p && !t;
      c.fn += !p && t;
    }
    c.f1 = f1_from(c.tp, c.fp, c.fn);
    tp += c.tp;
    fp += c.fp;
    fn += c.fn;
    report.macro_f1 += c.f1;
  }
  if (truth.cols() > 0) report.macro_f1 /= static_cast<double>(truth.cols());
  report.micro_f1 = f1_from(tp, fp, fn);
  return report;
}

EvalReport evaluate_transfer(const ModelParams& params, const PreparedNetwork& target,
                             double threshold) {
  if (!target.labels) throw ValidationError("target labels are required for evaluation");
  const Matrix predicted = predict(params, target.attributes, target.neighbors, threshold);
  return f1_scores(predicted, *target.labels);
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << report.to_key_values();
  if (!out) throw IoError("write failed: " + path.string());
}

void export_embeddings(const Matrix& embeddings, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << embeddings.rows() << ' ' << embeddings.cols() << '\n';
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
    out << i;
    for (Eigen::Index k = 0; k < embeddings.cols(); ++k) {
      out << '\t' << nn::format_double(embeddings(i, k));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void export_embeddings(const ModelParams& params, const PreparedNetwork& network,
                       const std::filesystem::path& path) {
  export_embeddings(embed_all(params, network.attributes, network.neighbors), path);
}

Matrix read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  if (!(in >> n >> d)) throw ParseError(path.string(), 1, "expected header 'n d'");
  Matrix out(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index node = -1;
    if (!(in >> node) || node != i) {
      throw ParseError(path.string(), static_cast<std::size_t>(i + 2), "bad node id");
    }
    for (Eigen::Index k = 0; k < d; ++k) {
      std::string token;
      if (!(in >> token)) throw ParseError(path.string(), static_cast<std::size_t>(i + 2), "short row");
      double v = 0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw ParseError(path.string(), static_cast<std::size_t>(i + 2), "bad value '" + token + "'");
      }
      out(i, k) = v;
    }
  }
  return out;
}

}  // namespace acdne
