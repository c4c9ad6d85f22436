#include "vwaplab/rng.hpp"

namespace vwaplab {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_stream_seed(std::uint64_t run_seed, Stream stream,
                                 std::uint64_t salt) {
  std::uint64_t h = splitmix64(run_seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  h = splitmix64(h ^ salt);
  return h;
}

Rng make_stream(std::uint64_t run_seed, Stream stream, std::uint64_t salt) {
  return Rng(derive_stream_seed(run_seed, stream, salt));
}

RunStreams RunStreams::for_run(std::uint64_t run_seed, std::uint64_t salt) {
  return RunStreams{
      make_stream(run_seed, Stream::PriceNoise, salt),
      make_stream(run_seed, Stream::JumpCount, salt),
      make_stream(run_seed, Stream::JumpSize, salt),
      make_stream(run_seed, Stream::Policy, salt),
  };
}

}  // namespace vwaplab
