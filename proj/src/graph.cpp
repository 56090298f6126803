#include "acdne/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>

#include "acdne/errors.hpp"

namespace acdne {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_any(std::string_view s, std::string_view delims) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto start = s.find_first_not_of(delims, pos);
    if (start == std::string_view::npos) break;
    auto end = s.find_first_of(delims, start);
    if (end == std::string_view::npos) end = s.size();
    out.push_back(s.substr(start, end - start));
    pos = end;
  }
  return out;
}

// Splits on every delimiter occurrence, keeping empty fields (CSV rows).
std::vector<std::string_view> split_fields(std::string_view s, char delim) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto end = s.find(delim, pos);
    out.push_back(trim(s.substr(pos, end == std::string_view::npos ? std::string_view::npos
                                                                    : end - pos)));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view token, T& value) {
  const char* begin = token.data();
  const char* end = token.data() + token.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

bool is_skippable(std::string_view line) {
  line = trim(line);
  return line.empty() || line.front() == '#';
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

AttributeFormat sniff_format(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  while (std::getline(in, line)) {
    if (is_skippable(line)) continue;
    if (line.find(',') != std::string::npos) return AttributeFormat::kDense;
    const auto tokens = split_any(trim(line), " \t");
    int a = 0;
    int b = 0;
    if (tokens.size() == 2 && parse_number(tokens[0], a) && parse_number(tokens[1], b)) {
      return AttributeFormat::kSparse;
    }
    return AttributeFormat::kDense;
  }
  return AttributeFormat::kDense;
}

AttributeTable read_dense(const std::filesystem::path& path) {
  auto in = open_input(path);
  const auto file = path.string();
  AttributeTable table;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_skippable(line)) continue;
    const auto fields = split_fields(trim(line), ',');
    if (first) {
      first = false;
      table.cols = static_cast<int>(fields.size());
      bool header = false;
      for (auto f : fields) {
        double v = 0;
        if (!parse_number(f, v)) header = true;
      }
      if (header) {
        for (auto f : fields) table.names.emplace_back(f);
        continue;
      }
    }
    if (static_cast<int>(fields.size()) != table.cols) {
      throw ParseError(file, line_no,
                       "expected " + std::to_string(table.cols) + " fields, got " +
                           std::to_string(fields.size()));
    }
    for (int c = 0; c < table.cols; ++c) {
      double v = 0;
      if (!parse_number(fields[c], v)) {
        throw ParseError(file, line_no, "not a number: '" + std::string(fields[c]) + "'");
      }
      if (v != 0.0) table.entries.emplace_back(table.rows, c, v);
    }
    ++table.rows;
  }
  return table;
}

AttributeTable read_sparse(const std::filesystem::path& path) {
  auto in = open_input(path);
  const auto file = path.string();
  AttributeTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_skippable(line)) continue;
    const auto tokens = split_any(trim(line), " \t");
    if (!have_header) {
      if (tokens.size() != 2 || !parse_number(tokens[0], table.rows) ||
          !parse_number(tokens[1], table.cols) || table.rows < 0 || table.cols < 0) {
        throw ParseError(file, line_no, "expected header 'n w'");
      }
      have_header = true;
      continue;
    }
    int node = 0;
    int attr = 0;
    double value = 0;
    if (tokens.size() != 3 || !parse_number(tokens[0], node) ||
        !parse_number(tokens[1], attr) || !parse_number(tokens[2], value)) {
      throw ParseError(file, line_no, "expected 'node<TAB>attr<TAB>value'");
    }
    if (node < 0 || node >= table.rows) {
      throw IndexError(file + ":" + std::to_string(line_no) + ": node " +
                       std::to_string(node) + " out of range [0, " +
                       std::to_string(table.rows) + ")");
    }
    if (attr < 0 || attr >= table.cols) {
      throw IndexError(file + ":" + std::to_string(line_no) + ": attribute " +
                       std::to_string(attr) + " out of range [0, " +
                       std::to_string(table.cols) + ")");
    }
    if (value != 0.0) table.entries.emplace_back(node, attr, value);
  }
  if (!have_header) throw ParseError(file, line_no, "missing header 'n w'");
  return table;
}

void check_unique(const std::vector<std::string>& names, std::string_view what) {
  std::set<std::string_view> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) {
      throw ValidationError(std::string(what) + ": duplicate attribute name '" + n + "'");
    }
  }
}

SparseMatrix remap_columns(const SparseMatrix& x, const std::vector<int>& column_map, int width) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(x.nonZeros()));
  for (int r = 0; r < x.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(x, r); it; ++it) {
      entries.emplace_back(r, column_map[it.col()], it.value());
    }
  }
  SparseMatrix out(x.rows(), width);
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

Matrix pad_classes(const Matrix& labels, int class_count) {
  Matrix out = Matrix::Zero(labels.rows(), class_count);
  out.leftCols(labels.cols()) = labels;
  return out;
}

}  // namespace

std::string_view to_string(LabelMode mode) {
  return mode == LabelMode::kMulticlass ? "multiclass" : "multilabel";
}

LabelMode parse_label_mode(std::string_view text) {
  if (text == "multiclass") return LabelMode::kMulticlass;
  if (text == "multilabel") return LabelMode::kMultilabel;
  throw ArgumentError("unknown label mode '" + std::string(text) + "'");
}

std::vector<std::pair<int, int>> AttributedNetwork::edges() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(edge_count()));
  for (int i = 0; i < adjacency.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(adjacency, i); it; ++it) {
      if (it.col() > i) out.emplace_back(i, static_cast<int>(it.col()));
    }
  }
  return out;
}

void AttributedNetwork::validate() const {
  if (node_count < 0) throw ValidationError("negative node count");
  if (adjacency.rows() != node_count || adjacency.cols() != node_count) {
    throw ValidationError("adjacency is not node_count x node_count");
  }
  for (int i = 0; i < adjacency.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(adjacency, i); it; ++it) {
      if (it.col() == i) throw ValidationError("self-loop at node " + std::to_string(i));
      if (adjacency.coeff(it.col(), i) != it.value()) {
        throw ValidationError("adjacency is not symmetric at (" + std::to_string(i) + ", " +
                              std::to_string(it.col()) + ")");
      }
    }
  }
  if (attributes.rows() != node_count) {
    throw ValidationError("attribute matrix has " + std::to_string(attributes.rows()) +
                          " rows, expected " + std::to_string(node_count));
  }
  for (int i = 0; i < attributes.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(attributes, i); it; ++it) {
      if (!std::isfinite(it.value()) || it.value() < 0) {
        throw ValidationError("attribute (" + std::to_string(i) + ", " +
                              std::to_string(it.col()) + ") is negative or not finite");
      }
    }
  }
  if (!attribute_names.empty()) {
    if (static_cast<int>(attribute_names.size()) != attribute_dim()) {
      throw ValidationError("attribute name count does not match attribute width");
    }
    check_unique(attribute_names, "network");
  }
  if (labels) {
    if (labels->rows() != node_count) throw ValidationError("label matrix row count mismatch");
    for (int i = 0; i < labels->rows(); ++i) {
      double sum = 0;
      for (int k = 0; k < labels->cols(); ++k) {
        const double v = (*labels)(i, k);
        if (v != 0.0 && v != 1.0) throw ValidationError("label entries must be 0 or 1");
        sum += v;
      }
      if (label_mode == LabelMode::kMulticlass && sum > 1.0) {
        throw ValidationError("multiclass label row " + std::to_string(i) + " sums to " +
                              std::to_string(sum));
      }
    }
  }
}

void NetworkPair::validate() const {
  source.validate();
  target.validate();
  if (source.attribute_dim() != target.attribute_dim()) {
    throw ValidationError("source and target attribute widths differ");
  }
  if (!source.labels) throw ValidationError("source network must be labeled");
  if (target.labels && target.class_count() != source.class_count()) {
    throw ValidationError("source and target class counts differ");
  }
  if (source.label_mode != target.label_mode) {
    throw ValidationError("source and target label modes differ");
  }
}

std::vector<std::pair<int, int>> read_edge_list(const std::filesystem::path& path) {
  auto in = open_input(path);
  const auto file = path.string();
  std::vector<std::pair<int, int>> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_skippable(line)) continue;
    const auto tokens = split_any(trim(line), " \t");
    int i = 0;
    int j = 0;
    // Trailing columns (edge weights) are ignored.
    if (tokens.size() < 2 || !parse_number(tokens[0], i) || !parse_number(tokens[1], j)) {
      throw ParseError(file, line_no, "expected 'i<TAB>j'");
    }
    if (i < 0 || j < 0) {
      throw IndexError(file + ":" + std::to_string(line_no) + ": negative node id");
    }
    edges.emplace_back(i, j);
  }
  return edges;
}

AttributeTable read_attributes(const std::filesystem::path& path, AttributeFormat format) {
  if (format == AttributeFormat::kAuto) format = sniff_format(path);
  return format == AttributeFormat::kSparse ? read_sparse(path) : read_dense(path);
}

LabelSets read_label_sets(const std::filesystem::path& path) {
  auto in = open_input(path);
  const auto file = path.string();
  LabelSets sets;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_skippable(line)) continue;
    const auto tokens = split_any(trim(line), " \t");
    int node = 0;
    if (tokens.empty() || tokens.size() > 2 || !parse_number(tokens[0], node)) {
      throw ParseError(file, line_no, "expected 'node<TAB>k1[,k2,...]'");
    }
    if (node < 0) throw IndexError(file + ":" + std::to_string(line_no) + ": negative node id");
    auto& categories = sets[node];
    if (tokens.size() == 2) {
      for (auto field : split_fields(tokens[1], ',')) {
        if (field.empty()) continue;
        int k = 0;
        if (!parse_number(field, k) || k < 0) {
          throw ParseError(file, line_no, "bad label '" + std::string(field) + "'");
        }
        categories.push_back(k);
      }
    }
  }
  return sets;
}

Matrix label_matrix(const LabelSets& sets, int node_count, LabelMode mode, int class_count) {
  if (class_count < 0) {
    class_count = 0;
    for (const auto& [node, cats] : sets) {
      for (int k : cats) class_count = std::max(class_count, k + 1);
    }
  }
  Matrix y = Matrix::Zero(node_count, class_count);
  for (const auto& [node, cats] : sets) {
    if (node >= node_count) {
      throw IndexError("label for node " + std::to_string(node) + " but network has " +
                       std::to_string(node_count) + " nodes");
    }
    for (int k : cats) {
      if (k >= class_count) {
        throw IndexError("label " + std::to_string(k) + " >= class count " +
                         std::to_string(class_count));
      }
      y(node, k) = 1.0;
    }
    if (mode == LabelMode::kMulticlass && y.row(node).sum() != 1.0) {
      throw ValidationError("multiclass label row for node " + std::to_string(node) +
                            " sums to " + std::to_string(y.row(node).sum()) + ", expected 1");
    }
  }
  return y;
}

LabelSets label_sets(const Matrix& labels) {
  LabelSets sets;
  for (int i = 0; i < labels.rows(); ++i) {
    auto& cats = sets[i];
    for (int k = 0; k < labels.cols(); ++k) {
      if (labels(i, k) != 0.0) cats.push_back(k);
    }
  }
  return sets;
}

SparseMatrix build_adjacency(int node_count, const std::vector<std::pair<int, int>>& edges) {
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(edges.size() * 2);
  for (const auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= node_count || j >= node_count) {
      throw IndexError("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                       ") references a node outside [0, " + std::to_string(node_count) + ")");
    }
    if (i == j) continue;
    entries.emplace_back(i, j, 1.0);
    entries.emplace_back(j, i, 1.0);
  }
  SparseMatrix adj(node_count, node_count);
  // Duplicates and reversed copies collapse to a single unit entry.
  adj.setFromTriplets(entries.begin(), entries.end(), [](double, double) { return 1.0; });
  return adj;
}

AttributedNetwork load_network(const std::filesystem::path& edge_file,
                               const std::filesystem::path& attribute_file,
                               const std::optional<std::filesystem::path>& label_file,
                               const LoadOptions& options) {
  auto table = read_attributes(attribute_file, options.attribute_format);
  AttributedNetwork net;
  net.node_count = table.rows;
  net.attributes.resize(table.rows, table.cols);
  net.attributes.setFromTriplets(table.entries.begin(), table.entries.end(),
                                 [&](double, double) -> double {
                                   throw ValidationError(attribute_file.string() +
                                                         ": duplicate attribute entry");
                                 });
  net.attribute_names = std::move(table.names);
  net.adjacency = build_adjacency(net.node_count, read_edge_list(edge_file));
  net.label_mode = options.label_mode;
  if (label_file) {
    net.labels = label_matrix(read_label_sets(*label_file), net.node_count, options.label_mode,
                              options.class_count);
  }
  net.validate();
  return net;
}

NetworkPair align_attributes(AttributedNetwork source, AttributedNetwork target) {
  const bool named_s = !source.attribute_names.empty();
  const bool named_t = !target.attribute_names.empty();
  if (named_s != named_t) {
    throw ValidationError("one network has attribute names and the other does not");
  }
  if (named_s) {
    check_unique(source.attribute_names, "source");
    check_unique(target.attribute_names, "target");
    if (source.attribute_names != target.attribute_names) {
      std::set<std::string> all(source.attribute_names.begin(), source.attribute_names.end());
      all.insert(target.attribute_names.begin(), target.attribute_names.end());
      std::vector<std::string> names(all.begin(), all.end());
      std::unordered_map<std::string, int> index;
      for (int c = 0; c < static_cast<int>(names.size()); ++c) index.emplace(names[c], c);
      for (auto* net : {&source, &target}) {
        std::vector<int> column_map;
        column_map.reserve(net->attribute_names.size());
        for (const auto& n : net->attribute_names) column_map.push_back(index.at(n));
        net->attributes = remap_columns(net->attributes, column_map,
                                        static_cast<int>(names.size()));
        net->attribute_names = names;
      }
    }
  } else if (source.attribute_dim() != target.attribute_dim()) {
    throw ValidationError("unnamed attribute columns require equal widths (" +
                          std::to_string(source.attribute_dim()) + " vs " +
                          std::to_string(target.attribute_dim()) + ")");
  }

  if (!source.labels) throw ValidationError("source network must be labeled");
  const int classes = std::max(source.class_count(), target.class_count());
  source.labels = pad_classes(*source.labels, classes);
  if (target.labels) target.labels = pad_classes(*target.labels, classes);

  NetworkPair pair{std::move(source), std::move(target)};
  pair.validate();
  return pair;
}

void reindex_attributes(AttributedNetwork& network, const std::vector<std::string>& vocabulary) {
  if (vocabulary.empty()) return;
  if (network.attribute_names.empty()) {
    if (network.attribute_dim() != static_cast<int>(vocabulary.size())) {
      throw ValidationError("unnamed attribute columns do not match the model's width");
    }
    return;
  }
  if (network.attribute_names == vocabulary) return;
  std::unordered_map<std::string, int> index;
  for (int c = 0; c < static_cast<int>(vocabulary.size()); ++c) index.emplace(vocabulary[c], c);
  std::vector<int> column_map;
  for (const auto& n : network.attribute_names) {
    auto it = index.find(n);
    if (it == index.end()) {
      throw ValidationError("attribute '" + n + "' is not in the model's vocabulary");
    }
    column_map.push_back(it->second);
  }
  network.attributes =
      remap_columns(network.attributes, column_map, static_cast<int>(vocabulary.size()));
  network.attribute_names = vocabulary;
}

void write_edge_list(const AttributedNetwork& network, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& [i, j] : network.edges()) out << i << '\t' << j << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

void write_sparse_attributes(const AttributedNetwork& network, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << network.node_count << ' ' << network.attribute_dim() << '\n';
  out << std::setprecision(17);
  for (int i = 0; i < network.attributes.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(network.attributes, i); it; ++it) {
      out << i << '\t' << it.col() << '\t' << it.value() << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_label_sets(const LabelSets& sets, const std::filesystem::path& path) {
  auto out = open_output(path);
  for (const auto& [node, cats] : sets) {
    out << node << '\t';
    for (std::size_t k = 0; k < cats.size(); ++k) out << (k ? "," : "") << cats[k];
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace acdne
