#include "a2p/nextwall/history.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace a2p::nw {

std::vector<HistoryRow> history_length_table(const NextWallModel& m, const std::vector<std::vector<WallSegment>>& sequences,
                                             std::size_t max_length, std::size_t min_walls, HistoryProtocol protocol) {
  std::vector<HistoryRow> rows;
  for (std::size_t h = 1; h <= max_length; ++h) {
    HistoryRow r{h, 0, 0, 0};
    auto add = [&](const std::vector<WallSegment>& seq, std::size_t k) {
      const std::size_t first = protocol == HistoryProtocol::Prefix ? k - h : 0;
      auto s = assign_timesteps({seq.begin() + static_cast<long>(first), seq.begin() + static_cast<long>(k)},
                                {seq.begin() + static_cast<long>(k), seq.end()});
      for (std::size_t i = 0; i + h < s.history.size(); ++i) s.history[i].timestep = 10;
      const auto sc = score_candidates(s, m);
      const auto best = std::max_element(sc.scores.begin(), sc.scores.end()) - sc.scores.begin();
      r.accuracy += best == 0 ? 1.0 : 0.0;
      r.entropy_bits += sc.entropy_bits;
      ++r.states;
    };
    for (const auto& seq : sequences) {
      if (seq.size() <= min_walls || seq.size() <= std::max(h, max_length)) continue;
      if (protocol == HistoryProtocol::Prefix) {
        add(seq, h);
      } else {
        for (std::size_t k = max_length; k < seq.size(); ++k) add(seq, k);
      }
    }
    if (r.states) {
      r.accuracy /= static_cast<double>(r.states);
      r.entropy_bits /= static_cast<double>(r.states);
    }
    rows.push_back(r);
  }
  return rows;
}

std::string history_csv(const std::vector<HistoryRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "history_length,accuracy,entropy_bits,states\n";
  for (const auto& r : rows) out << r.length << "," << r.accuracy << "," << r.entropy_bits << "," << r.states << "\n";
  return out.str();
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n, mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return saa > 0 && sbb > 0 ? sab / std::sqrt(saa * sbb) : 0.0;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman: need two equal-length samples of size >= 2");
  return pearson(ranks(x), ranks(y));
}

double spearman_p_value(const std::vector<double>& x, const std::vector<double>& y, Tail alt) {
  if (x.size() > 10) throw std::invalid_argument("spearman_p_value: exact test limited to n <= 10");
  const double observed = spearman(x, y);
  const auto rx = ranks(x);
  auto ry = ranks(y);
  std::sort(ry.begin(), ry.end());
  constexpr double eps = 1e-12;
  std::size_t hits = 0, total = 0;
  do {
    const double rho = pearson(rx, ry);
    hits += alt == Tail::Greater ? rho >= observed - eps : rho <= observed + eps;
    ++total;
  } while (std::next_permutation(ry.begin(), ry.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace a2p::nw
