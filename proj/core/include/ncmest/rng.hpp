#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

namespace ncmest {

// Seedable generator with fully pinned-down output streams: the engine is
// std::mt19937_64 (bit-exact by the standard) and every distribution below is
// implemented explicitly instead of going through std::*_distribution, whose
// algorithms are implementation-defined. uniform01() uses the top 53 bits of
// one engine draw; normal() is Box-Muller and consumes exactly two uniforms
// per call. Identical seeds therefore replay identical streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01();
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller (two uniform draws per call).
  double normal();
  bool bernoulli(double p);
  // Uniform integer in {0, ..., n-1} (Lemire multiply-shift bound).
  std::uint64_t uniform_int(std::uint64_t n);

  Eigen::VectorXd normal_vector(int dim);
  // Uniform point in the closed l2 ball of the given radius.
  Eigen::VectorXd uniform_ball(int dim, double radius);

 private:
  std::mt19937_64 engine_;
};

// Per-trial child seed: splitmix64 finalizer over master + stride*(index+1).
std::uint64_t child_seed(std::uint64_t master, std::uint64_t index);

}  // namespace ncmest
