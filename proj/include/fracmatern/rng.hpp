#pragma once

// Seeded standard-normal sampler.  Box-Muller on top of mt19937_64 so the
// stream is identical across standard libraries (std::normal_distribution is
// implementation-defined).

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace fracmatern {

class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : gen_(seed) {}

    double operator()()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = ((gen_() >> 11) + 1.0) * 0x1.0p-53; // in (0,1]
        const double u2 = (gen_() >> 11) * 0x1.0p-53;         // in [0,1)
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    Eigen::MatrixXd matrix(int rows, int cols)
    {
        Eigen::MatrixXd z(rows, cols);
        for (int j = 0; j < cols; ++j)
            for (int i = 0; i < rows; ++i) z(i, j) = (*this)();
        return z;
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace fracmatern
