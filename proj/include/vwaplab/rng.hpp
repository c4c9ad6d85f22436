#pragma once

#include <cstdint>
#include <random>

namespace vwaplab {

// Named substreams derived from a single run seed. Each consumer owns its own
// engine, so changing how one of them draws (for example swapping the policy)
// never shifts the draw order seen by the others (the market path stays put).
enum class Stream : std::uint64_t {
  PriceNoise = 1,
  JumpCount = 2,
  JumpSize = 3,
  Policy = 4,
  TestFunction = 5,
  Evaluation = 6,
  NetInit = 7,
};

std::uint64_t derive_stream_seed(std::uint64_t run_seed, Stream stream,
                                 std::uint64_t salt = 0);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return std::normal_distribution<double>{}(engine_); }

  double uniform01() { return std::uniform_real_distribution<double>{}(engine_); }

  // Exponential draw parameterized by its mean (not the rate).
  double exponential_mean(double mean) {
    return std::exponential_distribution<double>{1.0 / mean}(engine_);
  }

  long poisson(double mean) {
    return std::poisson_distribution<long>{mean}(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

Rng make_stream(std::uint64_t run_seed, Stream stream, std::uint64_t salt = 0);

// The bundle a single episode consumes.
struct RunStreams {
  Rng price;
  Rng jump_count;
  Rng jump_size;
  Rng policy;

  static RunStreams for_run(std::uint64_t run_seed, std::uint64_t salt = 0);
};

}  // namespace vwaplab
