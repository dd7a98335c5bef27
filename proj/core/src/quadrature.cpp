#include "amot/quadrature.hpp"

#include <array>

namespace amot {

namespace {

// Dunavant 6-point rule, degree of precision 4. Barycentric weights below are
// normalized to sum to 1 and halved on export (reference measure 1/2).
constexpr double kW4a = 0.223381589678011;
constexpr double kL4a1 = 0.108103018168070;
constexpr double kL4a2 = 0.445948490915965;
constexpr double kW4b = 0.109951743655322;
constexpr double kL4b1 = 0.816847572980459;
constexpr double kL4b2 = 0.091576213509771;

constexpr std::array<TriQuadPoint, 6> kTriDeg4 = {{
    {kL4a1, kL4a2, kL4a2, 0.5 * kW4a},
    {kL4a2, kL4a1, kL4a2, 0.5 * kW4a},
    {kL4a2, kL4a2, kL4a1, 0.5 * kW4a},
    {kL4b1, kL4b2, kL4b2, 0.5 * kW4b},
    {kL4b2, kL4b1, kL4b2, 0.5 * kW4b},
    {kL4b2, kL4b2, kL4b1, 0.5 * kW4b},
}};

// Dunavant 12-point rule, degree of precision 6.
constexpr double kW6a = 0.116786275726379;
constexpr double kL6a1 = 0.501426509658179;
constexpr double kL6a2 = 0.249286745170910;
constexpr double kW6b = 0.050844906370207;
constexpr double kL6b1 = 0.873821971016996;
constexpr double kL6b2 = 0.063089014491502;
constexpr double kW6c = 0.082851075618374;
constexpr double kL6c1 = 0.053145049844816;
constexpr double kL6c2 = 0.310352451033785;
constexpr double kL6c3 = 0.636502499121399;

constexpr std::array<TriQuadPoint, 12> kTriDeg6 = {{
    {kL6a1, kL6a2, kL6a2, 0.5 * kW6a},
    {kL6a2, kL6a1, kL6a2, 0.5 * kW6a},
    {kL6a2, kL6a2, kL6a1, 0.5 * kW6a},
    {kL6b1, kL6b2, kL6b2, 0.5 * kW6b},
    {kL6b2, kL6b1, kL6b2, 0.5 * kW6b},
    {kL6b2, kL6b2, kL6b1, 0.5 * kW6b},
    {kL6c1, kL6c2, kL6c3, 0.5 * kW6c},
    {kL6c1, kL6c3, kL6c2, 0.5 * kW6c},
    {kL6c2, kL6c1, kL6c3, 0.5 * kW6c},
    {kL6c2, kL6c3, kL6c1, 0.5 * kW6c},
    {kL6c3, kL6c1, kL6c2, 0.5 * kW6c},
    {kL6c3, kL6c2, kL6c1, 0.5 * kW6c},
}};

// 3-point Gauss-Legendre on [0,1], degree of precision 5.
constexpr double kGaussOffset = 0.387298334620741688517926539978;  // sqrt(3/5)/2
constexpr std::array<EdgeQuadPoint, 3> kEdgeDeg5 = {{
    {0.5 - kGaussOffset, 5.0 / 18.0},
    {0.5, 8.0 / 18.0},
    {0.5 + kGaussOffset, 5.0 / 18.0},
}};

}  // namespace

std::span<const TriQuadPoint> tri_rule_deg4() { return kTriDeg4; }
std::span<const TriQuadPoint> tri_rule_deg6() { return kTriDeg6; }
std::span<const EdgeQuadPoint> edge_rule_deg5() { return kEdgeDeg5; }

}  // namespace amot
