#pragma once

#include <cstdint>
#include <string>

namespace eflab {

// Deterministic stream generator: every random draw in the lab flows from a
// single config seed plus a purpose label. Identifier "pool-v1" is recorded
// in run manifests; draws are platform-independent (no std::distribution).
class Rng {
public:
    Rng(uint64_t seed, const std::string& purpose);

    uint64_t next_u64();
    double uniform();  // [0, 1)
    double uniform(double a, double b);
    double normal();   // Box-Muller from uniform bits

    static constexpr const char* kGeneratorId = "pool-v1";

private:
    uint64_t s_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace eflab
