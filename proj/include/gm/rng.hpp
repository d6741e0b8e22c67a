#pragma once

#include <cstdint>
#include <random>

#include "gm/linalg.hpp"

namespace gm {

// SplitMix64 finalizer; used to decorrelate stream keys derived from small
// consecutive integers before they seed the generator.
std::uint64_t mix64(std::uint64_t x);

// Combines a parent key with a child index into a new stream key.
std::uint64_t derive_key(std::uint64_t parent, std::uint64_t child);

// Purpose tags for top-level streams, so every random draw in the system is
// reachable from (master seed, named purpose, item index) and is independent of
// scheduling. Values are arbitrary but fixed: changing them changes all outputs.
namespace stream {
inline constexpr std::uint64_t kMirror = 0x6d6972726f72;     // per-feature z_j draws
inline constexpr std::uint64_t kFolds = 0x666f6c6473;        // CV fold shuffle
inline constexpr std::uint64_t kBootstrap = 0x626f6f74;      // residual resampling
inline constexpr std::uint64_t kDesign = 0x64657369676e;     // design matrix rows
inline constexpr std::uint64_t kTruth = 0x7472757468;        // support + amplitudes
inline constexpr std::uint64_t kNoise = 0x6e6f697365;        // response noise
inline constexpr std::uint64_t kReplicate = 0x7265706c;      // per-replicate parents
inline constexpr std::uint64_t kSplit = 0x73706c6974;        // data-splitting halves
}  // namespace stream

// A deterministic random stream identified by (master seed, stream key). The
// normal transform is a fixed Box-Muller so that draws are reproducible across
// platforms and standard-library versions, not just across runs.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_key);

    // Uniform on [0, 1).
    double uniform();
    // Standard normal draw.
    double normal();
    // Vector of n i.i.d. standard normals.
    Vector normal_vector(Eigen::Index n);
    // Uniform integer in {0, ..., bound-1}; bound ≥ 1. Unbiased via rejection.
    std::uint64_t integer(std::uint64_t bound);

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace gm
