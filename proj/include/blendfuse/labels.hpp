#pragma once

#include "blendfuse/core.hpp"

#include <algorithm>
#include <cmath>

namespace blendfuse {

// Target distribution for a blend: one-hot, 0.7/0.3 or 0.5/0.5.
using SoftLabel = Distribution;

SoftLabel encode_soft_label(const Blend& b);

// At most two non-zero entries drawn from {1}, {0.7, 0.3} or {0.5, 0.5}.
bool is_soft_label(const Distribution& y);

inline constexpr double kProbabilityFloor = 1e-12;

template <typename Derived>
auto softmax(const Eigen::MatrixBase<Derived>& z)
{
    using Scalar = typename Derived::Scalar;
    const Scalar m = z.maxCoeff();
    Eigen::Matrix<Scalar, Derived::RowsAtCompileTime, 1> e = (z.array() - m).exp().matrix();
    return Eigen::Matrix<Scalar, Derived::RowsAtCompileTime, 1>(e / e.sum());
}

// KL(y || p) = sum_i y_i ln(y_i / p_i), terms with y_i = 0 contribute nothing.
// p is clamped to [kProbabilityFloor, 1] before the log.
template <typename DerivedY, typename DerivedP>
typename DerivedY::Scalar kl_loss(const Eigen::MatrixBase<DerivedY>& y, const Eigen::MatrixBase<DerivedP>& p)
{
    using Scalar = typename DerivedY::Scalar;
    if (!y.allFinite() || !p.allFinite())
        throw NumericError("kl_loss: non-finite input");
    Scalar loss = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const Scalar yi = y(i);
        if (yi <= Scalar(0))
            continue;
        const Scalar pi = std::clamp(static_cast<Scalar>(p(i)), Scalar(kProbabilityFloor), Scalar(1));
        loss += yi * std::log(yi / pi);
    }
    return loss;
}

// d/dz KL(y || softmax(z)) = softmax(z) - y, valid because y sums to one.
template <typename DerivedY, typename DerivedZ>
auto kl_grad_logits(const Eigen::MatrixBase<DerivedY>& y, const Eigen::MatrixBase<DerivedZ>& z)
{
    if (!y.allFinite() || !z.allFinite())
        throw NumericError("kl_grad_logits: non-finite input");
    return Eigen::Matrix<typename DerivedZ::Scalar, DerivedZ::RowsAtCompileTime, 1>(softmax(z) - y);
}

} // namespace blendfuse
