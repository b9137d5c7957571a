#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "wesd/detail/jacobi.hpp"
#include "wesd/distances.hpp"
#include "wesd/errors.hpp"

namespace wesd {

/// Symmetric pairwise-distance matrix over identified shapes. All entries
/// come from one metric with one parameter set.
class AffinityMatrix {
 public:
  AffinityMatrix(std::vector<std::string> ids, std::vector<double> values,
                 std::string metric_descriptor)
      : ids_(std::move(ids)),
        values_(std::move(values)),
        metric_(std::move(metric_descriptor)) {
    const std::size_t n = ids_.size();
    require(n >= 1, ErrorCode::InvalidArgument, "affinity matrix is empty");
    require(values_.size() == n * n, ErrorCode::InvalidArgument,
            "affinity matrix shape does not match identifier count");
    for (const auto& id : ids_)
      require(id.find(',') == std::string::npos &&
                  id.find('\n') == std::string::npos,
              ErrorCode::InvalidArgument,
              "identifier '" + id + "' cannot carry commas or newlines");
    for (std::size_t i = 0; i < n; ++i) {
      require(values_[i * n + i] == 0.0, ErrorCode::InvalidArgument,
              "affinity diagonal must be zero");
      for (std::size_t j = 0; j < n; ++j) {
        require(values_[i * n + j] >= 0.0, ErrorCode::InvalidArgument,
                "affinity entries must be nonnegative");
        require(values_[i * n + j] == values_[j * n + i],
                ErrorCode::InvalidArgument, "affinity matrix must be symmetric");
      }
    }
  }

  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::string& metric_descriptor() const noexcept { return metric_; }
  double at(std::size_t i, std::size_t j) const {
    return values_[i * ids_.size() + j];
  }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::string metric_;
};

/// Computes every unordered pair once; pairs are distributed over `workers`
/// threads writing disjoint cells, so the result is independent of the
/// worker count.
inline AffinityMatrix pairwise_matrix(const std::vector<std::string>& ids,
                                      const std::vector<Spectrum>& spectra,
                                      const DistanceParams& params,
                                      int workers = 1) {
  require(ids.size() == spectra.size(), ErrorCode::InvalidArgument,
          "identifier and spectrum counts differ");
  require(!spectra.empty(), ErrorCode::InvalidArgument, "no spectra given");
  require(workers >= 1, ErrorCode::InvalidArgument, "workers must be >= 1");
  const std::size_t n = spectra.size();
  for (std::size_t i = 1; i < n; ++i) {
    require(spectra[i].dim() == spectra[0].dim(), ErrorCode::DimensionMismatch,
            "heterogeneous inputs: spectrum dimensions differ");
    require(spectra[i].tag() == spectra[0].tag(),
            ErrorCode::NormalisationMismatch,
            "heterogeneous inputs: normalisation tags differ");
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

  std::vector<double> values(n * n, 0.0);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run_chunk = [&](std::size_t begin, std::size_t end) {
    try {
      for (std::size_t k = begin; k < end; ++k) {
        const auto [i, j] = pairs[k];
        const double v = distance(spectra[i], spectra[j], params).value;
        values[i * n + j] = v;
        values[j * n + i] = v;
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };

  const int used = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(workers),
                            std::max<std::size_t>(pairs.size(), 1)));
  if (used <= 1) {
    run_chunk(0, pairs.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (pairs.size() + used - 1) / used;
    for (int w = 0; w < used; ++w) {
      const std::size_t begin = static_cast<std::size_t>(w) * chunk;
      const std::size_t end = std::min(begin + chunk, pairs.size());
      if (begin >= end) break;
      pool.emplace_back(run_chunk, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::string descriptor = std::string(metric_name(params.metric)) + " p=" +
                           std::to_string(params.p) +
                           " N=" + std::to_string(params.modes);
  return AffinityMatrix(ids, std::move(values), std::move(descriptor));
}

/// Low-dimensional embedding with its MDS diagnostics.
struct Embedding {
  std::vector<std::string> ids;
  std::vector<double> coords;  // row-major, size() x dim
  int dim = 0;
  int requested_dim = 0;
  std::vector<double> mds_eigenvalues;  // centered Gram, sorted descending
  double stress = 0.0;
  std::string warning;

  double at(std::size_t i, int axis) const {
    return coords[i * static_cast<std::size_t>(dim) +
                  static_cast<std::size_t>(axis)];
  }
};

namespace detail {

/// Union-symmetrized k-nearest-neighbour graph; ties broken by identifier.
inline std::vector<std::vector<std::pair<std::size_t, double>>> knn_graph(
    const AffinityMatrix& m, int k_neighbors) {
  const std::size_t n = m.size();
  const std::size_t k =
      std::min<std::size_t>(static_cast<std::size_t>(k_neighbors), n - 1);
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  std::vector<std::size_t> cand(n);
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) cand.push_back(j);
    std::sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
      if (m.at(i, a) != m.at(i, b)) return m.at(i, a) < m.at(i, b);
      return m.ids()[a] < m.ids()[b];
    });
    for (std::size_t t = 0; t < k; ++t)
      adj[i].emplace_back(cand[t], m.at(i, cand[t]));
  }
  // union symmetrization
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& [j, w] : std::vector<std::pair<std::size_t, double>>(adj[i])) {
      bool present = false;
      for (const auto& [b, bw] : adj[j])
        if (b == i) present = true;
      if (!present) adj[j].emplace_back(i, w);
    }
  return adj;
}

inline std::vector<double> dijkstra(
    const std::vector<std::vector<std::pair<std::size_t, double>>>& adj,
    std::size_t source) {
  const std::size_t n = adj.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  dist[source] = 0.0;
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> queue;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u]) continue;
    for (const auto& [v, w] : adj[u]) {
      if (dist[u] + w < dist[v]) {
        dist[v] = dist[u] + w;
        queue.emplace(dist[v], v);
      }
    }
  }
  return dist;
}

inline std::string describe_components(
    const std::vector<std::vector<std::pair<std::size_t, double>>>& adj,
    const std::vector<std::string>& ids) {
  const std::size_t n = adj.size();
  std::vector<int> comp(n, -1);
  int count = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<std::size_t> stack{s};
    comp[s] = count;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (const auto& [v, w] : adj[u])
        if (comp[v] < 0) {
          comp[v] = count;
          stack.push_back(v);
        }
    }
    ++count;
  }
  std::ostringstream out;
  out << count << " components:";
  for (int c = 0; c < count; ++c) {
    out << " {";
    int emitted = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (comp[i] != c) continue;
      if (emitted > 0) out << ' ';
      if (emitted == 4) {
        out << "...";
        break;
      }
      out << ids[i];
      ++emitted;
    }
    out << "}";
  }
  return out.str();
}

}  // namespace detail

/// ISOMAP: k-NN graph (union-symmetrized), all-pairs shortest paths, then
/// classical MDS of the geodesic matrix via a dense Jacobi eigensolver.
/// Axis signs are canonicalized so identical inputs reproduce identical
/// output files.
inline Embedding isomap(const AffinityMatrix& m, int k_neighbors,
                        int target_dim) {
  require(k_neighbors >= 1, ErrorCode::InvalidArgument,
          "k_neighbors must be >= 1");
  require(target_dim >= 1, ErrorCode::InvalidArgument,
          "target dimension must be >= 1");
  const std::size_t n = m.size();
  require(n >= 2, ErrorCode::InvalidArgument,
          "embedding needs at least two shapes");

  const auto adj = detail::knn_graph(m, k_neighbors);
  std::vector<double> geo(n * n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    const auto dist = detail::dijkstra(adj, s);
    for (std::size_t j = 0; j < n; ++j) {
      require(std::isfinite(dist[j]), ErrorCode::DisconnectedGraph,
              "k-NN graph is disconnected (" +
                  detail::describe_components(adj, m.ids()) + ")");
      geo[s * n + j] = dist[j];
    }
  }

  // Double-centered squared-distance Gram: B = -1/2 J D^2 J.
  std::vector<double> gram(n * n, 0.0);
  std::vector<double> row_mean(n, 0.0);
  double total_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d2 = geo[i * n + j] * geo[i * n + j];
      row_mean[i] += d2;
      total_mean += d2;
    }
    row_mean[i] /= static_cast<double>(n);
  }
  total_mean /= static_cast<double>(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d2 = geo[i * n + j] * geo[i * n + j];
      gram[i * n + j] = -0.5 * (d2 - row_mean[i] - row_mean[j] + total_mean);
    }

  std::vector<double> values, vectors;
  detail::jacobi_eigen(gram, n, values, vectors, 1e-12);
  // jacobi returns ascending; MDS wants descending.
  std::reverse(values.begin(), values.end());
  std::vector<double> vec_desc(n * n);
  for (std::size_t i = 0; i < n; ++i)
    std::copy_n(vectors.data() + (n - 1 - i) * n, n, vec_desc.data() + i * n);

  const double scale = std::max(std::abs(values.front()), 1e-300);
  int positive = 0;
  for (double v : values)
    if (v > 1e-12 * scale) ++positive;

  Embedding emb;
  emb.ids = m.ids();
  emb.requested_dim = target_dim;
  emb.dim = std::min(target_dim, positive);
  emb.mds_eigenvalues = values;
  if (emb.dim < target_dim)
    emb.warning = "target dimension truncated to " + std::to_string(emb.dim) +
                  ": only that many positive Gram eigenvalues";
  require(emb.dim >= 1, ErrorCode::InvalidArgument,
          "centered Gram matrix has no positive eigenvalues");

  emb.coords.assign(n * static_cast<std::size_t>(emb.dim), 0.0);
  for (int a = 0; a < emb.dim; ++a) {
    const double lam = std::sqrt(std::max(values[a], 0.0));
    for (std::size_t i = 0; i < n; ++i)
      emb.coords[i * emb.dim + a] =
          lam * vec_desc[static_cast<std::size_t>(a) * n + i];
    // canonical sign: the entry of largest magnitude is positive
    std::size_t arg = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(emb.coords[i * emb.dim + a]) >
          std::abs(emb.coords[arg * emb.dim + a]))
        arg = i;
    if (emb.coords[arg * emb.dim + a] < 0.0)
      for (std::size_t i = 0; i < n; ++i) emb.coords[i * emb.dim + a] *= -1.0;
  }

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double d2 = 0.0;
      for (int a = 0; a < emb.dim; ++a) {
        const double diff = emb.at(i, a) - emb.at(j, a);
        d2 += diff * diff;
      }
      const double diff = std::sqrt(d2) - geo[i * n + j];
      num += diff * diff;
      den += geo[i * n + j] * geo[i * n + j];
    }
  emb.stress = den > 0.0 ? std::sqrt(num / den) : 0.0;
  return emb;
}

/// Affinity CSV: first row and column carry identifiers; 17 significant
/// digits so files reproduce bit-for-bit.
inline void save_affinity_csv(const AffinityMatrix& m, std::ostream& out) {
  out << "id";
  for (const auto& id : m.ids()) out << ',' << id;
  out << '\n';
  char buf[64];
  const std::size_t n = m.size();
  for (std::size_t i = 0; i < n; ++i) {
    out << m.ids()[i];
    for (std::size_t j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m.at(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

inline void save_affinity_csv(const AffinityMatrix& m,
                              const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::IoError,
          "cannot open '" + path.string() + "' for writing");
  save_affinity_csv(m, out);
}

inline AffinityMatrix load_affinity_csv(std::istream& in,
                                        const std::string& descriptor = {}) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::ParseError,
          "affinity csv: empty input");
  std::vector<std::string> ids;
  {
    std::istringstream ls(line);
    std::string cell;
    bool first = true;
    while (std::getline(ls, cell, ',')) {
      if (first) {
        first = false;
        continue;  // corner cell
      }
      ids.push_back(cell);
    }
  }
  require(!ids.empty(), ErrorCode::ParseError, "affinity csv: no identifiers");
  const std::size_t n = ids.size();
  std::vector<double> values(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::ParseError,
            "affinity csv: truncated rows");
    std::istringstream ls(line);
    std::string cell;
    require(static_cast<bool>(std::getline(ls, cell, ',')),
            ErrorCode::ParseError, "affinity csv: empty row");
    require(cell == ids[i], ErrorCode::ParseError,
            "affinity csv: row identifier '" + cell + "' does not match '" +
                ids[i] + "'");
    for (std::size_t j = 0; j < n; ++j) {
      require(static_cast<bool>(std::getline(ls, cell, ',')),
              ErrorCode::ParseError, "affinity csv: short row");
      try {
        values[i * n + j] = std::stod(cell);
      } catch (const std::exception&) {
        fail(ErrorCode::ParseError, "affinity csv: bad number '" + cell + "'");
      }
    }
  }
  return AffinityMatrix(std::move(ids), std::move(values), descriptor);
}

inline AffinityMatrix load_affinity_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return load_affinity_csv(in, path.stem().string());
}

/// Embedding CSV: header "id,c1,...,ck" then one row per shape.
inline void save_embedding_csv(const Embedding& emb, std::ostream& out) {
  out << "id";
  for (int a = 1; a <= emb.dim; ++a) out << ",c" << a;
  out << '\n';
  char buf[64];
  for (std::size_t i = 0; i < emb.ids.size(); ++i) {
    out << emb.ids[i];
    for (int a = 0; a < emb.dim; ++a) {
      std::snprintf(buf, sizeof(buf), "%.17g", emb.at(i, a));
      out << ',' << buf;
    }
    out << '\n';
  }
}

inline void save_embedding_csv(const Embedding& emb,
                               const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::IoError,
          "cannot open '" + path.string() + "' for writing");
  save_embedding_csv(emb, out);
}

}  // namespace wesd
