#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "wesd/embedding.hpp"
#include "wesd/errors.hpp"

namespace wesd {

/// Class-labelled affinity matrix ready for retrieval scoring.
struct LabeledDataset {
  AffinityMatrix affinity;
  std::vector<std::string> labels;  // aligned with affinity ids

  LabeledDataset(AffinityMatrix m, std::vector<std::string> lbls)
      : affinity(std::move(m)), labels(std::move(lbls)) {
    require(labels.size() == affinity.size(), ErrorCode::InvalidArgument,
            "label count does not match affinity matrix order");
  }
};

struct RetrievalScores {
  double nn = 0.0;
  double ft = 0.0;
  double st = 0.0;
  double e_measure = 0.0;
  double dcg = 0.0;
  std::vector<std::pair<double, double>> precision_recall;  // (recall, prec)
  int skipped_queries = 0;  // singleton classes have no relevant items
};

/// Standard ranked-retrieval scores, macro-averaged over queries. The query
/// is excluded from its own ranking; ties break by identifier order. The
/// E-measure cutoff is 32 (or the whole gallery when it is smaller).
inline RetrievalScores evaluate(const LabeledDataset& ds) {
  const std::size_t n = ds.affinity.size();
  require(n >= 2, ErrorCode::InvalidArgument,
          "retrieval needs at least two shapes");

  std::map<std::string, std::size_t> class_size;
  for (const auto& label : ds.labels) ++class_size[label];

  constexpr int kRecallLevels = 20;
  RetrievalScores out;
  out.precision_recall.assign(kRecallLevels, {0.0, 0.0});
  for (int r = 0; r < kRecallLevels; ++r)
    out.precision_recall[r].first = (r + 1) / static_cast<double>(kRecallLevels);

  int queries = 0;
  for (std::size_t q = 0; q < n; ++q) {
    const std::size_t relevant_total = class_size[ds.labels[q]] - 1;
    if (relevant_total == 0) {
      ++out.skipped_queries;
      continue;
    }
    ++queries;

    std::vector<std::size_t> order;
    order.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != q) order.push_back(j);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double da = ds.affinity.at(q, a);
      const double db = ds.affinity.at(q, b);
      if (da != db) return da < db;
      return ds.affinity.ids()[a] < ds.affinity.ids()[b];
    });

    std::vector<int> gain(order.size());
    for (std::size_t r = 0; r < order.size(); ++r)
      gain[r] = ds.labels[order[r]] == ds.labels[q] ? 1 : 0;

    out.nn += gain[0];

    const auto recall_at = [&](std::size_t cutoff) {
      std::size_t hits = 0;
      for (std::size_t r = 0; r < std::min(cutoff, order.size()); ++r)
        hits += gain[r];
      return static_cast<double>(hits) / static_cast<double>(relevant_total);
    };
    out.ft += recall_at(relevant_total);
    out.st += recall_at(2 * relevant_total);

    const std::size_t e_cut = std::min<std::size_t>(32, order.size());
    std::size_t e_hits = 0;
    for (std::size_t r = 0; r < e_cut; ++r) e_hits += gain[r];
    const double precision = static_cast<double>(e_hits) / e_cut;
    const double recall =
        static_cast<double>(e_hits) / static_cast<double>(relevant_total);
    out.e_measure += (precision + recall) > 0.0
                         ? 2.0 * precision * recall / (precision + recall)
                         : 0.0;

    // DCG with log2 discounting, normalized by the ideal ranking.
    double dcg = gain[0];
    for (std::size_t r = 1; r < order.size(); ++r)
      dcg += gain[r] / std::log2(static_cast<double>(r + 1));
    double ideal = 1.0;
    for (std::size_t r = 1; r < relevant_total; ++r)
      ideal += 1.0 / std::log2(static_cast<double>(r + 1));
    out.dcg += dcg / ideal;

    // Interpolated precision at fixed recall levels.
    std::vector<double> prec_at_rank(order.size());
    std::size_t hits = 0;
    for (std::size_t r = 0; r < order.size(); ++r) {
      hits += gain[r];
      prec_at_rank[r] = static_cast<double>(hits) / static_cast<double>(r + 1);
    }
    for (int level = 0; level < kRecallLevels; ++level) {
      const double want = out.precision_recall[level].first;
      double best = 0.0;
      std::size_t running = 0;
      for (std::size_t r = 0; r < order.size(); ++r) {
        running += gain[r];
        const double rec =
            static_cast<double>(running) / static_cast<double>(relevant_total);
        if (rec + 1e-12 >= want) best = std::max(best, prec_at_rank[r]);
      }
      out.precision_recall[level].second += best;
    }
  }

  require(queries > 0, ErrorCode::InvalidArgument,
          "every class is a singleton: no query has relevant items");
  const double count = static_cast<double>(queries);
  out.nn /= count;
  out.ft /= count;
  out.st /= count;
  out.e_measure /= count;
  out.dcg /= count;
  for (auto& [recall, precision] : out.precision_recall) precision /= count;
  return out;
}

/// Labels CSV: "id,class" per line (optional "id,class" header tolerated).
inline std::vector<std::string> load_labels_csv(std::istream& in,
                                                const std::vector<std::string>& ids) {
  std::map<std::string, std::string> by_id;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    require(comma != std::string::npos, ErrorCode::ParseError,
            "labels csv: missing comma in '" + line + "'");
    const std::string id = line.substr(0, comma);
    const std::string label = line.substr(comma + 1);
    if (first && id == "id") {
      first = false;
      continue;
    }
    first = false;
    require(by_id.emplace(id, label).second, ErrorCode::ParseError,
            "labels csv: duplicate identifier '" + id + "'");
  }
  std::vector<std::string> labels;
  labels.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    require(it != by_id.end(), ErrorCode::ParseError,
            "labels csv: no label for identifier '" + id + "'");
    labels.push_back(it->second);
  }
  return labels;
}

inline std::vector<std::string> load_labels_csv(
    const std::filesystem::path& path, const std::vector<std::string>& ids) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return load_labels_csv(in, ids);
}

inline void save_scores(const RetrievalScores& s, std::ostream& out) {
  char buf[64];
  auto emit = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << key << ' ' << buf << '\n';
  };
  emit("NN", s.nn);
  emit("FT", s.ft);
  emit("ST", s.st);
  emit("E", s.e_measure);
  emit("DCG", s.dcg);
  out << "skipped_queries " << s.skipped_queries << '\n';
  out << "precision_recall " << s.precision_recall.size() << '\n';
  for (const auto& [recall, precision] : s.precision_recall) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", recall, precision);
    out << buf << '\n';
  }
}

}  // namespace wesd
