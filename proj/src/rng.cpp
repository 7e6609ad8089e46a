#include "hvlab/rng.hpp"

#include <cmath>

namespace hvlab::rng {

void Stream::unit_sphere(double& x, double& y, double& z) {
    z = 1.0 - 2.0 * uniform();
    double phi = 2.0 * M_PI * uniform();
    double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    x = s * std::cos(phi);
    y = s * std::sin(phi);
}

} // namespace hvlab::rng
