#include "birdpose/optimizer.hpp"

#include <cmath>
#include <string>

#include "birdpose/common.hpp"

namespace birdpose {

void AdamOptions::validate() const {
    if (!(learning_rate > 0.0)) throw Error(ErrorKind::Validation, "learning_rate", "learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw Error(ErrorKind::Validation, "beta1", "beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw Error(ErrorKind::Validation, "beta2", "beta2 must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw Error(ErrorKind::Validation, "epsilon", "epsilon must be positive");
}

Adam::Adam(Eigen::Index size, AdamOptions options) : opt_(options), m_(Eigen::VectorXd::Zero(size)),
                                                     v_(Eigen::VectorXd::Zero(size)) {
    opt_.validate();
}

void Adam::step(Eigen::VectorXd& x, const Eigen::VectorXd& grad) {
    if (x.size() != m_.size() || grad.size() != m_.size()) {
        throw Error(ErrorKind::DimensionMismatch, "grad",
                    "optimizer holds " + std::to_string(m_.size()) + " variables, got " + std::to_string(x.size()) +
                        " and gradient " + std::to_string(grad.size()));
    }
    ++t_;
    m_ = opt_.beta1 * m_ + (1.0 - opt_.beta1) * grad;
    v_ = opt_.beta2 * v_ + (1.0 - opt_.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    x.array() -= opt_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + opt_.epsilon);
}

void Adam::reset() {
    m_.setZero();
    v_.setZero();
    t_ = 0;
}

}  // namespace birdpose
