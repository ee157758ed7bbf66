#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sysid/systems.hpp"
#include "sysid/types.hpp"

namespace sysid {

// One experiment: columns are time steps. Noise realizations are kept so the
// error-decomposition identity and the concentration terms can be evaluated
// on simulated data.
struct Rollout {
  Matrix states;  // n x (T+1)
  Matrix inputs;  // p x T
  Matrix noises;  // n x T
};

struct RolloutSet {
  std::vector<Rollout> true_rollouts;
  std::vector<Rollout> aux_rollouts;
};

// Column provenance inside a batch. system: 0 = true, 1 = auxiliary.
struct ColumnTag {
  int system = 0;
  int rollout = 0;
  int k = 0;
};

// Batch matrices satisfying X = Theta Z + W + Delta for Theta = [A B] of the
// true model. Column order: within rollout i, time runs k = T-1 down to 0;
// rollouts in index order, true-system rollouts before auxiliary ones.
struct BatchData {
  Matrix x_mat;      // n x (N_r + N_p) T
  Matrix z_mat;      // (n+p) x (N_r + N_p) T
  Matrix w_mat;      // n x (N_r + N_p) T
  Matrix delta_mat;  // n x (N_r + N_p) T, zero columns for true-system data
  std::vector<ColumnTag> tags;
  int true_count = 0;
  int aux_count = 0;
  int horizon = 0;
};

// `count` independent rollouts. Rollout i draws from a dedicated stream
// seeded with mix_seed(seed, i); within a rollout the draw order is x_0
// coordinates, then per step k the input then the noise coordinates.
// Bit-reproducible for fixed (seed, count, model).
std::vector<Rollout> simulate_rollouts(const SystemModel& model, int count, std::uint64_t seed);

BatchData assemble_batch(const std::vector<Rollout>& true_rollouts,
                         const std::vector<Rollout>& aux_rollouts,
                         const SystemModel& true_model, const SystemModel& aux_model);

// CSV with header system,rollout,k,x_1..x_n,u_1..u_p,w_1..w_n and one row per
// recorded step; the final row of each rollout (k = T) carries the terminal
// state with empty input/noise fields. Values use 17 significant digits.
void save_rollouts_csv(const std::string& path, const RolloutSet& set);
RolloutSet load_rollouts_csv(const std::string& path);

}  // namespace sysid
