#pragma once

#include <string_view>

namespace mscme::examples {

// Linear two-species system, S = X1 + X2, F = X2.
inline constexpr std::string_view kLinear = R"(# Linear fast/slow system
species X1 X2
volume 1
reaction R1: 0 -> X1 @ 20
reaction R2: X2 -> 0 @ 1
reaction R3: X1 -> X2 @ 5
reaction R4: X2 -> X1 @ 5
slow S = X1 + X2
fast F = X2
domain X1 in 0..200
domain X2 in 0..200
domain S in 0..400
)";

// Bistable system; R5 and R6 are the fast pair, S = X1 + 2*X2, F = X2.
// Second order rates are stored pre-divided by V.
inline constexpr std::string_view kBistable = R"(# Bistable system
species X1 X2
volume 1
reaction R1: X2 -> X1 + X2 @ 142
reaction R2: X1 + X2 -> X2 @ 1
reaction R3: 0 -> X1 @ 880
reaction R4: X1 -> 0 @ 92.8
reaction R5: 2*X1 -> X2 @ 10
reaction R6: X2 -> 2*X1 @ 500
reaction R7: X2 -> 0 @ 6
slow S = X1 + 2*X2
fast F = X2
domain X1 in 0..800
domain X2 in 0..1200
domain S in 0..2000
)";

// Three time scales: R3,R4 fastest, R5,R6 fast, R1,R2 slow.
inline constexpr std::string_view kThreeScale = R"(# Three-timescale linear system
species X1 X2 X3
volume 1
reaction R1: 0 -> X1 @ 20
reaction R2: X3 -> 0 @ 1
reaction R3: X1 -> X2 @ 100
reaction R4: X2 -> X1 @ 100
reaction R5: X2 -> X3 @ 10
reaction R6: X3 -> X2 @ 10
slow S1 = X1 + X2 + X3
fast F1a = X2
fast F1b = X3
domain S1 in 0..400
)";

// Two-level reduction plan for kThreeScale.
inline constexpr std::string_view kThreeScalePlan = R"(# Nested reduction: constrain S1, then S2 inside each S1 fiber
level
slow S1 = X1 + X2 + X3
fast F1a = X2
fast F1b = X3
level
slow S2 = X1 + X2
fast F2 = X1
)";

}  // namespace mscme::examples
