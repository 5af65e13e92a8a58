#pragma once

#include <string>
#include <vector>

#include "a2p/nextwall/model.hpp"

namespace a2p::nw {

struct HistoryRow {
  std::size_t length = 0;
  double accuracy = 0;      // top-1, GT next wall
  double entropy_bits = 0;  // softmax entropy, temperature 1
  std::size_t states = 0;
};

enum class HistoryProtocol {
  // Targets are GT positions k >= max_length; every wall before k is in the
  // history, only the last h keep their order (t = h..1), older ones get
  // t = 10. Same targets and candidates for every h.
  FixedTargets,
  // history = first h GT walls, candidates = the rest.
  Prefix,
};

// Rows for history lengths 1..max_length over sequences with more than
// min_walls walls.
std::vector<HistoryRow> history_length_table(const NextWallModel& m, const std::vector<std::vector<WallSegment>>& sequences,
                                             std::size_t max_length = 9, std::size_t min_walls = 10,
                                             HistoryProtocol protocol = HistoryProtocol::FixedTargets);

std::string history_csv(const std::vector<HistoryRow>& rows);

// Spearman rank correlation; ties get average ranks.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

enum class Tail { Greater, Less };

// Exact one-sided permutation p-value of Spearman's rho: the fraction of the
// n! orderings of y whose rho is >= (Greater) or <= (Less) the observed one.
// Throws for n > 10.
double spearman_p_value(const std::vector<double>& x, const std::vector<double>& y, Tail alt);

}  // namespace a2p::nw
