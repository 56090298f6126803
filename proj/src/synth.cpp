#include "acdne/synth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "acdne/errors.hpp"

namespace acdne {

namespace {

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

// Selection sampling: yields exactly `wanted` of `population` positions,
// uniformly without replacement, visiting positions in increasing order.
class SelectionSampler {
 public:
  SelectionSampler(long long population, long long wanted)
      : remaining_(population), wanted_(wanted) {}

  bool take(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const bool chosen = static_cast<double>(remaining_) * u(rng) < static_cast<double>(wanted_);
    --remaining_;
    if (chosen) --wanted_;
    return chosen;
  }

 private:
  long long remaining_;
  long long wanted_;
};

}  // namespace

void SynthSpec::validate() const {
  if (n_source < 1 || n_target < 1) throw ValidationError("both networks need at least one node");
  if (classes < 1) throw ValidationError("class count must be >= 1");
  if (n_source < classes || n_target < classes) {
    throw ValidationError("fewer nodes than classes would leave a class empty");
  }
  if (attribute_dim < classes) {
    throw ValidationError("attribute dim must allow one column block per class");
  }
  auto check_probs = [](double in, double out, const char* which) {
    if (!in_unit(in) || !in_unit(out) || out > in) {
      throw ValidationError(std::string(which) + ": need 0 <= p_out <= p_in <= 1");
    }
  };
  check_probs(p_in, p_out, "source");
  check_probs(target_p_in.value_or(p_in), target_p_out.value_or(p_out), "target");
  if (!in_unit(signal) || !in_unit(background)) {
    throw ValidationError("signal and background must lie in [0, 1]");
  }
  if (!in_unit(flip_rate)) throw ValidationError("flip rate must lie in [0, 1]");
}

AttributedNetwork generate_network(int nodes, int classes, int attribute_dim, double p_in,
                                   double p_out, double signal, double background,
                                   std::mt19937_64& rng) {
  std::vector<int> cls(nodes);
  for (int i = 0; i < nodes; ++i) cls[i] = i % classes;
  std::shuffle(cls.begin(), cls.end(), rng);

  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < nodes; ++i) {
    for (int j = i + 1; j < nodes; ++j) {
      if (u(rng) < (cls[i] == cls[j] ? p_in : p_out)) edges.emplace_back(i, j);
    }
  }

  const int block = attribute_dim / classes;
  std::vector<Eigen::Triplet<double>> entries;
  for (int i = 0; i < nodes; ++i) {
    const int lo = cls[i] * block;
    for (int c = 0; c < attribute_dim; ++c) {
      const bool own = c >= lo && c < lo + block;
      if (u(rng) < (own ? signal : background)) entries.emplace_back(i, c, 1.0);
    }
  }

  AttributedNetwork net;
  net.node_count = nodes;
  net.adjacency = build_adjacency(nodes, edges);
  net.attributes.resize(nodes, attribute_dim);
  net.attributes.setFromTriplets(entries.begin(), entries.end());
  Matrix y = Matrix::Zero(nodes, classes);
  for (int i = 0; i < nodes; ++i) y(i, cls[i]) = 1.0;
  net.labels = std::move(y);
  net.label_mode = LabelMode::kMulticlass;
  return net;
}

NetworkPair generate_pair(const SynthSpec& spec) {
  spec.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed),
                    static_cast<std::uint32_t>(spec.seed >> 32)};
  std::uint32_t sub[6];
  seq.generate(sub, sub + 6);
  std::mt19937_64 source_rng((static_cast<std::uint64_t>(sub[0]) << 32) | sub[1]);
  std::mt19937_64 target_rng((static_cast<std::uint64_t>(sub[2]) << 32) | sub[3]);
  std::mt19937_64 flip_rng((static_cast<std::uint64_t>(sub[4]) << 32) | sub[5]);

  NetworkPair pair;
  pair.source = generate_network(spec.n_source, spec.classes, spec.attribute_dim, spec.p_in,
                                 spec.p_out, spec.signal, spec.background, source_rng);
  pair.target = generate_network(spec.n_target, spec.classes, spec.attribute_dim,
                                 spec.target_p_in.value_or(spec.p_in),
                                 spec.target_p_out.value_or(spec.p_out), spec.signal,
                                 spec.background, target_rng);
  pair.target.attributes = perturb_attributes(pair.target.attributes, spec.flip_rate, flip_rng);
  pair.validate();
  return pair;
}

SparseMatrix perturb_attributes(const SparseMatrix& attributes, double flip_rate,
                                std::mt19937_64& rng) {
  if (!in_unit(flip_rate)) throw ArgumentError("flip rate must lie in [0, 1]");
  for (Eigen::Index i = 0; i < attributes.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(attributes, i); it; ++it) {
      if (it.value() != 1.0 && it.value() != 0.0) {
        throw ValidationError("attribute perturbation needs a binary matrix");
      }
    }
  }
  SparseMatrix x = attributes;
  x.prune(0.0, 0.0);
  const long long cells = static_cast<long long>(x.rows()) * x.cols();
  const long long ones = x.nonZeros();
  const long long zeros = cells - ones;
  SelectionSampler drop(ones, static_cast<long long>(std::floor(flip_rate * ones)));
  SelectionSampler add(zeros, static_cast<long long>(std::floor(flip_rate * zeros)));

  std::vector<Eigen::Triplet<double>> entries;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    SparseMatrix::InnerIterator it(x, i);
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const bool set = it && it.col() == c;
      if (set) ++it;
      const bool flip = set ? drop.take(rng) : add.take(rng);
      if (set != flip) entries.emplace_back(i, c, 1.0);
    }
  }
  SparseMatrix out(x.rows(), x.cols());
  out.setFromTriplets(entries.begin(), entries.end());
  return out;
}

void write_pair(const NetworkPair& pair, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& [name, net] : {std::pair<const char*, const AttributedNetwork*>{"source", &pair.source},
                                  {"target", &pair.target}}) {
    write_edge_list(*net, dir / (std::string(name) + ".edges"));
    write_sparse_attributes(*net, dir / (std::string(name) + ".attrs"));
    if (net->labels) write_label_sets(label_sets(*net->labels), dir / (std::string(name) + ".labels"));
  }
}

}  // namespace acdne
