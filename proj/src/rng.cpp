#include "lyap/rng.hpp"

namespace lyap {

Vector Rng::unit_vector(std::size_t dim) {
    Vector v(dim);
    double n = 0.0;
    do {
        for (double& x : v) x = normal(0.0, 1.0);
        n = norm2(v);
    } while (n < 1e-12);
    for (double& x : v) x /= n;
    return v;
}

}  // namespace lyap
