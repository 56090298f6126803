#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "acdne/graph.hpp"
#include "acdne/model.hpp"
#include "acdne/trainer.hpp"

namespace acdne {

struct ClassCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double f1 = 0;
};

struct EvalReport {
  double micro_f1 = 0;
  double macro_f1 = 0;
  std::vector<ClassCounts> per_class;
  long n_evaluated = 0;

  std::string to_text() const;
  // key=value lines: micro_f1, macro_f1, n_evaluated, then class_<k>_{tp,fp,fn,f1}.
  std::string to_key_values() const;
};

// Per-class counts over the 0/1 indicator matrices. A class that is never
// present and never predicted scores F1 = 0 and still counts towards macro.
EvalReport f1_scores(const Matrix& predicted, const Matrix& truth);

// Scores predictions on every target node against its held-out labels.
EvalReport evaluate_transfer(const ModelParams& params, const PreparedNetwork& target,
                             double threshold = 0.5);

void write_report(const EvalReport& report, const std::filesystem::path& path);

// Header `n d`, then `node<TAB>e_1<TAB>...<TAB>e_d` per node.
void export_embeddings(const Matrix& embeddings, const std::filesystem::path& path);
void export_embeddings(const ModelParams& params, const PreparedNetwork& network,
                       const std::filesystem::path& path);
Matrix read_embeddings(const std::filesystem::path& path);

}  // namespace acdne
