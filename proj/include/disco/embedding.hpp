#pragma once

#include <Eigen/Dense>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "disco/graph.hpp"
#include "disco/rng.hpp"

namespace disco {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Learnable parameters of the embedding update and the Q head.
///
///   x_v <- relu(alpha1 * sum_{u in N(v)} x_u
///              + alpha2 * sum_{u in N(v)} relu(alpha3 * w(v,u))
///              + alpha4 * a_v)
///   Q(v) = beta1^T relu([beta2 * sum_u x_u ; beta3 * x_v])
struct Theta {
  Matrix alpha1;  // q x q
  Matrix alpha2;  // q x q
  Vector alpha3;  // q
  Vector alpha4;  // q
  Vector beta1;   // 2q
  Matrix beta2;   // q x q
  Matrix beta3;   // q x q

  static Theta zeros(std::size_t q) {
    const auto d = static_cast<Eigen::Index>(q);
    return {Matrix::Zero(d, d), Matrix::Zero(d, d), Vector::Zero(d), Vector::Zero(d),
            Vector::Zero(2 * d), Matrix::Zero(d, d), Matrix::Zero(d, d)};
  }

  std::size_t q() const noexcept { return static_cast<std::size_t>(alpha3.size()); }

  /// Visits the seven tensors in a fixed order as (name, matrix-like).
  template <class F>
  void for_each(F&& f) {
    f("alpha1", alpha1);
    f("alpha2", alpha2);
    f("alpha3", alpha3);
    f("alpha4", alpha4);
    f("beta1", beta1);
    f("beta2", beta2);
    f("beta3", beta3);
  }

  template <class F>
  void for_each(F&& f) const {
    f("alpha1", alpha1);
    f("alpha2", alpha2);
    f("alpha3", alpha3);
    f("alpha4", alpha4);
    f("beta1", beta1);
    f("beta2", beta2);
    f("beta3", beta3);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each([&](std::string_view, const auto& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
  }

  /// Throws unless every tensor matches dimension q().
  void check_shapes() const {
    const auto d = alpha3.size();
    auto square = [d](const Matrix& m) { return m.rows() == d && m.cols() == d; };
    if (d < 1 || !square(alpha1) || !square(alpha2) || alpha4.size() != d || beta1.size() != 2 * d ||
        !square(beta2) || !square(beta3)) {
      throw Error("theta tensors have inconsistent dimensions");
    }
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&](std::string_view, const auto& t) { ok = ok && t.allFinite(); });
    return ok;
  }

  friend bool operator==(const Theta& a, const Theta& b) {
    return a.alpha1 == b.alpha1 && a.alpha2 == b.alpha2 && a.alpha3 == b.alpha3 && a.alpha4 == b.alpha4 &&
           a.beta1 == b.beta1 && a.beta2 == b.beta2 && a.beta3 == b.beta3;
  }
};

/// Every entry drawn uniformly from (0, 0.1).
inline Theta init_theta(std::size_t q, std::uint64_t rng_seed) {
  if (q == 0) throw Error("embedding dimension must be >= 1");
  Theta t = Theta::zeros(q);
  Rng rng(rng_seed);
  t.for_each([&](std::string_view, auto& tensor) {
    for (Eigen::Index j = 0; j < tensor.cols(); ++j) {
      for (Eigen::Index i = 0; i < tensor.rows(); ++i) {
        double x;
        do {
          x = 0.1 * rng.uniform();
        } while (x == 0.0);
        tensor(i, j) = x;
      }
    }
  });
  return t;
}

/// Which adjacency N(v) means for directed graphs. Undirected graphs ignore it.
enum class NeighborMode { Out, In, Both };

inline std::string_view to_string(NeighborMode m) {
  switch (m) {
    case NeighborMode::Out: return "out";
    case NeighborMode::In: return "in";
    case NeighborMode::Both: return "both";
  }
  return "?";
}

inline NeighborMode parse_neighbor_mode(std::string_view s) {
  if (s == "out") return NeighborMode::Out;
  if (s == "in") return NeighborMode::In;
  if (s == "both") return NeighborMode::Both;
  throw Error("unknown neighbor mode '" + std::string(s) + "'");
}

struct EmbedOptions {
  int iterations = 4;
  NeighborMode neighbors = NeighborMode::Out;
};

/// N(v) with edge weights, in CSR form.
class Neighborhoods {
 public:
  Neighborhoods(const Graph& g, NeighborMode mode) : offsets_(g.n() + 1, 0) {
    const bool both = g.directed() && mode == NeighborMode::Both;
    for (NodeId v = 0; v < g.n(); ++v) {
      auto primary = (g.directed() && mode == NeighborMode::In) ? g.in(v) : g.out(v);
      if (!both) {
        arcs_.insert(arcs_.end(), primary.begin(), primary.end());
      } else {
        // Merge out and in lists; an out-arc wins when both directions exist.
        auto out = g.out(v);
        auto in = g.in(v);
        std::size_t i = 0, j = 0;
        while (i < out.size() || j < in.size()) {
          if (j == in.size() || (i < out.size() && out[i].to <= in[j].to)) {
            if (j < in.size() && out[i].to == in[j].to) ++j;
            arcs_.push_back(out[i++]);
          } else {
            arcs_.push_back(in[j++]);
          }
        }
      }
      offsets_[v + 1] = arcs_.size();
    }
  }

  std::size_t n() const noexcept { return offsets_.size() - 1; }

  std::span<const Arc> of(NodeId v) const noexcept {
    return {arcs_.data() + offsets_[v], arcs_.data() + offsets_[v + 1]};
  }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<Arc> arcs_;
};

/// Node embeddings (column v is x_v) after `iterations_done` rounds, plus
/// the seed indicators they were computed with.
struct EmbeddingState {
  Matrix x;
  Vector a;
  int iterations_done = 0;
};

/// Everything the backward pass needs from a forward embedding.
struct EmbeddingTrace {
  Matrix edge_term;           // column v: sum_u relu(alpha3 * w(v,u))
  std::vector<Matrix> agg;    // agg[i]: neighbor sums of x^(i), i = 0..I-1
  std::vector<Matrix> pre;    // pre[i]: pre-activation of round i+1
  std::vector<Matrix> x;      // x[i] = x^(i), i = 0..I
  Vector a;
};

inline Vector seed_indicator(std::size_t n, std::span<const NodeId> seeds) {
  Vector a = Vector::Zero(static_cast<Eigen::Index>(n));
  for (NodeId s : seeds) {
    if (s >= n) throw Error("seed id out of range");
    a(s) = 1.0;
  }
  return a;
}

namespace detail {

inline Matrix neighbor_sum(const Neighborhoods& nb, const Matrix& x) {
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (NodeId v = 0; v < nb.n(); ++v) {
    for (const Arc& arc : nb.of(v)) out.col(v) += x.col(arc.to);
  }
  return out;
}

inline Matrix edge_term(const Neighborhoods& nb, const Theta& theta) {
  const auto q = static_cast<Eigen::Index>(theta.q());
  Matrix e = Matrix::Zero(q, static_cast<Eigen::Index>(nb.n()));
  for (NodeId v = 0; v < nb.n(); ++v) {
    for (const Arc& arc : nb.of(v)) e.col(v) += (theta.alpha3 * arc.w).cwiseMax(0.0);
  }
  return e;
}

}  // namespace detail

/// Synchronous rounds from x^(0) = 0; round i reads only round i-1 values.
/// When `trace` is given it receives the intermediates for backprop.
inline EmbeddingState embed(const Neighborhoods& nb, Vector a, const Theta& theta, int iterations,
                            EmbeddingTrace* trace = nullptr) {
  theta.check_shapes();
  if (iterations < 0) throw Error("embedding iterations must be >= 0");
  if (static_cast<std::size_t>(a.size()) != nb.n()) throw Error("seed indicator length differs from n");
  const auto q = static_cast<Eigen::Index>(theta.q());
  const auto n = static_cast<Eigen::Index>(nb.n());
  Matrix x = Matrix::Zero(q, n);
  const Matrix e = detail::edge_term(nb, theta);
  // alpha2 * E + alpha4 * a^T does not change between rounds.
  const Matrix fixed = theta.alpha2 * e + theta.alpha4 * a.transpose();
  if (trace) {
    trace->edge_term = e;
    trace->agg.clear();
    trace->pre.clear();
    trace->x.assign(1, x);
    trace->a = a;
  }
  for (int i = 0; i < iterations; ++i) {
    Matrix agg = detail::neighbor_sum(nb, x);
    Matrix pre = theta.alpha1 * agg + fixed;
    x = pre.cwiseMax(0.0);
    if (trace) {
      trace->agg.push_back(std::move(agg));
      trace->pre.push_back(std::move(pre));
      trace->x.push_back(x);
    }
  }
  return {std::move(x), std::move(a), iterations};
}

inline EmbeddingState embed(const Graph& g, std::span<const NodeId> seeds, const Theta& theta,
                            const EmbedOptions& opts = {}) {
  Neighborhoods nb(g, opts.neighbors);
  return embed(nb, seed_indicator(g.n(), seeds), theta, opts.iterations);
}

/// Intermediates of the Q head for one embedding.
struct QHead {
  Vector global;  // beta2 * sum_u x_u
  Matrix local;   // column v: beta3 * x_v
  Vector q;       // Q(v) for every node
};

inline QHead q_head(const EmbeddingState& state, const Theta& theta) {
  theta.check_shapes();
  if (state.x.rows() != static_cast<Eigen::Index>(theta.q())) throw Error("embedding dimension differs from theta");
  const auto q = static_cast<Eigen::Index>(theta.q());
  QHead h;
  h.global = theta.beta2 * state.x.rowwise().sum();
  h.local = theta.beta3 * state.x;
  const double shared = theta.beta1.head(q).dot(h.global.cwiseMax(0.0));
  h.q = (theta.beta1.tail(q).transpose() * h.local.cwiseMax(0.0)).transpose();
  h.q.array() += shared;
  return h;
}

/// Q(v, S) for every node v given the embedding of S.
inline Vector q_values(const EmbeddingState& state, const Theta& theta) { return q_head(state, theta).q; }

inline Vector q_values(const Graph& g, std::span<const NodeId> seeds, const Theta& theta,
                       const EmbedOptions& opts = {}) {
  return q_values(embed(g, seeds, theta, opts), theta);
}

// ---------------------------------------------------------------------------
// Model file: "disco-model 1", q, iterations, neighbors, then each tensor as
// "name rows cols" followed by `rows` lines of row-major values.

struct Model {
  Theta theta;
  EmbedOptions options;
};

inline constexpr std::string_view kModelMagic = "disco-model";
inline constexpr int kModelVersion = 1;

inline void save_model(std::ostream& out, const Model& model) {
  model.theta.check_shapes();
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << "q " << model.theta.q() << '\n';
  out << "iterations " << model.options.iterations << '\n';
  out << "neighbors " << to_string(model.options.neighbors) << '\n';
  char buf[64];
  model.theta.for_each([&](std::string_view name, const auto& t) {
    // Vectors are written as a single row.
    const bool vec = t.cols() == 1;
    const auto rows = vec ? 1 : t.rows();
    const auto cols = vec ? t.rows() : t.cols();
    out << name << ' ' << rows << ' ' << cols << '\n';
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        const double v = vec ? t(c, 0) : t(r, c);
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific, 16);
        if (c) out << ' ';
        out.write(buf, ptr - buf);
      }
      out << '\n';
    }
  });
}

inline Model load_model(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kModelMagic) throw Error("not a model file");
  if (version != kModelVersion) throw Error("unsupported model version " + std::to_string(version));
  auto expect = [&](std::string_view key) {
    std::string k;
    if (!(in >> k) || k != key) throw Error("model file: expected '" + std::string(key) + "'");
  };
  std::size_t q = 0;
  Model m;
  std::string mode;
  expect("q");
  in >> q;
  expect("iterations");
  in >> m.options.iterations;
  expect("neighbors");
  in >> mode;
  if (!in || q == 0) throw Error("model file: bad header");
  m.options.neighbors = parse_neighbor_mode(mode);
  m.theta = Theta::zeros(q);
  m.theta.for_each([&](std::string_view name, auto& t) {
    expect(name);
    Eigen::Index rows = 0, cols = 0;
    in >> rows >> cols;
    const bool vec = t.cols() == 1;
    const auto want_rows = vec ? 1 : t.rows();
    const auto want_cols = vec ? t.rows() : t.cols();
    if (!in || rows != want_rows || cols != want_cols) {
      throw Error("model file: tensor " + std::string(name) + " has wrong shape");
    }
    std::string tok;
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        double v = 0.0;
        if (!(in >> tok) || !detail::parse_number(tok, v)) {
          throw Error("model file: bad value in tensor " + std::string(name));
        }
        (vec ? t(c, 0) : t(r, c)) = v;
      }
    }
  });
  if (!m.theta.all_finite()) throw Error("model file contains non-finite values");
  return m;
}

inline void save_model_file(const std::string& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  save_model(out, model);
}

inline Model load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return load_model(in);
}

}  // namespace disco
