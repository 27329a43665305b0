#pragma once

#include <memory>
#include <random>

#include "matlift/demo_assets.hpp"
#include "matlift/evaluation.hpp"
#include "matlift/oracle.hpp"
#include "matlift/render.hpp"
#include "matlift/session.hpp"

namespace matlift::testing {

/// Demo object with `n_views` Fibonacci views at size x size.
lift::Scene demo_scene(int n_views = 30, int size = 256);

/// Single-material sphere with Fibonacci views.
lift::Scene sphere_scene(int n_views = 12, int size = 96);

std::shared_ptr<const oracle::SimilarityOracle> synthetic_oracle(oracle::NoiseModel noise = {});

metrics::SessionFactory session_factory(const lift::Scene& scene,
                                        std::shared_ptr<const oracle::SimilarityOracle> oracle,
                                        lift::SelectionConfig config = {});

/// Seeded click on `material` at least four pixels from its border.
oracle::Click interior_click(const render::ViewBundle& bundle, int material, std::uint64_t seed = 0);

/// Random cloud of `n` points uniform in the unit cube with values in [0, 1].
std::shared_ptr<lift::SimilarityCloud> uniform_cloud(std::size_t n, std::uint64_t seed);

/// Random mask with each pixel set with probability `p`.
BinaryMask random_mask(int w, int h, double p, std::mt19937_64& rng);

}  // namespace matlift::testing
