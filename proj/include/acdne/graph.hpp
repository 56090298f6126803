#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace acdne {

using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class LabelMode { kMulticlass, kMultilabel };

std::string_view to_string(LabelMode mode);
LabelMode parse_label_mode(std::string_view text);

// One attributed graph. Nodes are 0..node_count-1; the adjacency matrix is
// symmetric, unweighted and has an empty diagonal.
struct AttributedNetwork {
  int node_count = 0;
  SparseMatrix adjacency;
  SparseMatrix attributes;  // node_count x attribute_dim, nonnegative
  // Column names of `attributes`; empty when the input carried none.
  std::vector<std::string> attribute_names;
  // node_count x class_count 0/1 indicator matrix.
  std::optional<Matrix> labels;
  LabelMode label_mode = LabelMode::kMulticlass;

  int attribute_dim() const { return static_cast<int>(attributes.cols()); }
  int class_count() const { return labels ? static_cast<int>(labels->cols()) : 0; }
  // Undirected edges, each counted once.
  long edge_count() const { return adjacency.nonZeros() / 2; }
  std::vector<std::pair<int, int>> edges() const;

  // Throws ValidationError/IndexError on any broken invariant.
  void validate() const;
};

// Source (labeled) and target network sharing one attribute space.
struct NetworkPair {
  AttributedNetwork source;
  AttributedNetwork target;

  int attribute_dim() const { return source.attribute_dim(); }
  int class_count() const { return source.class_count(); }
  void validate() const;
};

enum class AttributeFormat { kAuto, kDense, kSparse };

struct AttributeTable {
  int rows = 0;
  int cols = 0;
  std::vector<Eigen::Triplet<double>> entries;
  std::vector<std::string> names;
};

// node -> label categories, in file order.
using LabelSets = std::map<int, std::vector<int>>;

std::vector<std::pair<int, int>> read_edge_list(const std::filesystem::path& path);
AttributeTable read_attributes(const std::filesystem::path& path,
                               AttributeFormat format = AttributeFormat::kAuto);
LabelSets read_label_sets(const std::filesystem::path& path);

// Builds an n x c indicator matrix. class_count < 0 infers c from the data.
Matrix label_matrix(const LabelSets& sets, int node_count, LabelMode mode,
                    int class_count = -1);
LabelSets label_sets(const Matrix& labels);

SparseMatrix build_adjacency(int node_count, const std::vector<std::pair<int, int>>& edges);

struct LoadOptions {
  LabelMode label_mode = LabelMode::kMulticlass;
  AttributeFormat attribute_format = AttributeFormat::kAuto;
  int class_count = -1;
};

AttributedNetwork load_network(const std::filesystem::path& edge_file,
                               const std::filesystem::path& attribute_file,
                               const std::optional<std::filesystem::path>& label_file,
                               const LoadOptions& options = {});

// Re-indexes both attribute matrices onto the sorted union of attribute
// names. Unnamed networks are aligned positionally and must agree on width.
// Label matrices are padded to a common class count.
NetworkPair align_attributes(AttributedNetwork source, AttributedNetwork target);

// Maps `network` onto an existing column vocabulary (used at prediction
// time). Names not in `vocabulary` raise ValidationError.
void reindex_attributes(AttributedNetwork& network, const std::vector<std::string>& vocabulary);

void write_edge_list(const AttributedNetwork& network, const std::filesystem::path& path);
void write_sparse_attributes(const AttributedNetwork& network, const std::filesystem::path& path);
void write_label_sets(const LabelSets& sets, const std::filesystem::path& path);

}  // namespace acdne
