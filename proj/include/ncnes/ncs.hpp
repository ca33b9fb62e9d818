#pragma once

#include <span>
#include <vector>

#include "ncnes/optimizer.hpp"

namespace ncnes {

// One search process of the simplified original-NCS baseline ("NCS-C"):
// a single parent with an isotropic Gaussian mutation distribution.
struct NcsProcess {
  std::vector<double> parent;
  double parent_fitness = 0.0;
  double sigma = 1.0;  // > 0
};

// The process's sampling distribution N(parent, sigma^2 I).
SearchDistribution to_distribution(const NcsProcess& proc);

// Decentralized diversity of process i: the minimum Bhattacharyya distance
// from its distribution to any other process. With no peers the value is
// +infinity (nothing constrains the process; selection falls back to
// fitness only).
double decentralized_diversity(std::size_t i, std::span<const NcsProcess> procs);

// Heuristic survivor selection between a parent and its offspring, judged by
// fitness plus phi times the min-distance diversity against `peers` (the
// other processes' current states). Ties keep the parent. Returns one of the
// two inputs.
NcsProcess heuristic_select(const NcsProcess& parent,
                            const NcsProcess& offspring,
                            std::span<const NcsProcess> peers, double phi,
                            Sense sense);

// In-place sequential selection sweep in index order. Process i's diversity
// is measured against the current states of all other processes, so earlier
// decisions in the same sweep influence later ones. Returns which offspring
// were accepted.
std::vector<bool> selection_sweep(std::vector<NcsProcess>& procs,
                                  std::span<const NcsProcess> offspring,
                                  double phi, Sense sense);

// The NCS-C baseline loop: one offspring per process per iteration via
// isotropic mutation, sequential selection sweep, sigma adapted by the
// 1/5-success rule (epoch 10 iterations, factor 1.1, sigma floored at
// sqrt(kVarFloor)). Single-threaded by design. Reports the same structure
// as the NCNES optimizer.
RunReport run_ncs_c(const RunConfig& cfg, const Objective& obj);

}  // namespace ncnes
