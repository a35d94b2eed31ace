#pragma once

#include "blendfuse/core.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace blendfuse {

struct MlpConfig {
    std::vector<int> hidden_dims = {1024, 512};
    double dropout = 0.3;
    int output_dim = kNumEmotions;
    double lr = 1e-3;
    double momentum = 0.9;
    int max_epochs = 500;
    int patience = 80;
    int batch_size = 64;
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const MlpConfig&, const MlpConfig&) = default;
};

enum class Mode { train, eval };

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

template <typename Scalar>
struct BatchNormT {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    Vector gamma, beta;
    Vector running_mean, running_var;

    explicit BatchNormT(Eigen::Index dim = 0)
        : gamma(Vector::Ones(dim)), beta(Vector::Zero(dim)), running_mean(Vector::Zero(dim)),
          running_var(Vector::Ones(dim))
    {
    }
};

// Train mode normalizes with batch statistics (population variance) and
// folds them into the running estimates; eval mode uses the running ones.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
batchnorm_forward(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& batch, BatchNormT<Scalar>& bn, Mode mode);

// Trainable tensors of the head. Hidden block i is affine -> batchnorm -> ReLU -> dropout.
template <typename Scalar>
struct MlpParamsT {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    struct Hidden {
        Matrix weight; // out x in
        Vector bias;
        Vector gamma;
        Vector beta;
    };
    std::vector<Hidden> hidden;
    Matrix out_weight;
    Vector out_bias;

    template <typename F>
    void visit(F&& f)
    {
        for (auto& h : hidden) {
            f(h.weight);
            f(h.bias);
            f(h.gamma);
            f(h.beta);
        }
        f(out_weight);
        f(out_bias);
    }

    // Same-layout tensors of `this` and `other`, pairwise.
    template <typename F>
    void zip(MlpParamsT& other, F&& f)
    {
        for (std::size_t i = 0; i < hidden.size(); ++i) {
            f(hidden[i].weight, other.hidden[i].weight);
            f(hidden[i].bias, other.hidden[i].bias);
            f(hidden[i].gamma, other.hidden[i].gamma);
            f(hidden[i].beta, other.hidden[i].beta);
        }
        f(out_weight, other.out_weight);
        f(out_bias, other.out_bias);
    }

    MlpParamsT zeros_like() const;
    Eigen::Index count() const;
};

template <typename Scalar>
class MlpModelT {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Params = MlpParamsT<Scalar>;

    MlpModelT() = default;
    // Glorot-uniform weights, zero biases, identity batchnorm.
    MlpModelT(Eigen::Index input_dim, const MlpConfig& cfg);

    Eigen::Index input_dim() const { return input_dim_; }
    const MlpConfig& config() const { return cfg_; }
    Mode mode() const { return mode_; }
    void set_mode(Mode m) { mode_ = m; }

    Params& params() { return params_; }
    const Params& params() const { return params_; }
    std::vector<BatchNormT<Scalar>>& batchnorms() { return bn_; }
    const std::vector<BatchNormT<Scalar>>& batchnorms() const { return bn_; }

    // Eval-mode forward of a single feature vector.
    DistributionT<Scalar> forward(const Vector& x) const;
    // Eval-mode softmax probabilities, one row per input row.
    Matrix predict(const Matrix& X) const;

    // Mean KL over the batch and its gradient w.r.t. every parameter, in train
    // mode (batch statistics). Dropout masks are drawn from `rng` when the rate
    // is positive; running statistics are updated only if `update_running`.
    Scalar loss_and_gradient(const Matrix& X, const Matrix& Y, Params& grad, std::mt19937_64* rng,
                             bool update_running);

    // Mean KL of eval-mode predictions.
    Scalar mean_loss(const Matrix& X, const Matrix& Y) const;

    void save(const std::filesystem::path& path) const;
    static MlpModelT load(const std::filesystem::path& path);
    std::string serialize() const;
    static MlpModelT deserialize(const std::string& text);

    friend bool operator==(const MlpModelT& a, const MlpModelT& b) { return a.serialize() == b.serialize(); }

private:
    MlpConfig cfg_;
    Eigen::Index input_dim_ = 0;
    Mode mode_ = Mode::eval;
    Params params_;
    std::vector<BatchNormT<Scalar>> bn_;
};

using MlpModel = MlpModelT<double>;
using MlpParams = MlpParamsT<double>;
using BatchNorm = BatchNormT<double>;

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

template <typename Scalar>
struct TrainResultT {
    MlpModelT<Scalar> model; // best-validation snapshot, eval mode
    std::vector<EpochLog> log;
    int best_epoch = 0;
    double best_val_loss = 0.0;
};

using TrainResult = TrainResultT<double>;

// Mini-batch SGD with momentum on mean soft-label KL, early-stopped on mean
// validation KL. Rows of X are feature vectors, rows of Y soft labels.
template <typename Scalar>
TrainResultT<Scalar> train_mlp(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& train_x,
                               const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& train_y,
                               const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& val_x,
                               const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& val_y,
                               const MlpConfig& cfg);

inline TrainResult train_mlp(const Eigen::MatrixXd& train_x, const Eigen::MatrixXd& train_y,
                             const Eigen::MatrixXd& val_x, const Eigen::MatrixXd& val_y, const MlpConfig& cfg)
{
    return train_mlp<double>(train_x, train_y, val_x, val_y, cfg);
}

std::string format_training_log(const std::vector<EpochLog>& log);

} // namespace blendfuse
