#pragma once

#include <Eigen/Core>

namespace birdpose {

struct AdamOptions {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

// Adam with bias-corrected first and second moments.
class Adam {
public:
    Adam(Eigen::Index size, AdamOptions options = {});

    void step(Eigen::VectorXd& x, const Eigen::VectorXd& grad);
    void reset();

    long iterations() const { return t_; }

private:
    AdamOptions opt_;
    Eigen::VectorXd m_, v_;
    long t_ = 0;
};

}  // namespace birdpose
