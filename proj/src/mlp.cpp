#include "blendfuse/mlp.hpp"

#include "blendfuse/io.hpp"
#include "blendfuse/labels.hpp"
#include "blendfuse/random.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace blendfuse {

namespace {

template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
MatrixT<Scalar> softmax_rows(const MatrixT<Scalar>& logits)
{
    MatrixT<Scalar> p(logits.rows(), logits.cols());
    for (Eigen::Index n = 0; n < logits.rows(); ++n) {
        const Scalar m = logits.row(n).maxCoeff();
        p.row(n) = (logits.row(n).array() - m).exp().matrix();
        p.row(n) /= p.row(n).sum();
    }
    return p;
}

template <typename Scalar>
Scalar mean_kl(const MatrixT<Scalar>& Y, const MatrixT<Scalar>& P)
{
    Scalar total = 0;
    for (Eigen::Index n = 0; n < Y.rows(); ++n)
        total += kl_loss(Y.row(n).transpose(), P.row(n).transpose());
    return total / static_cast<Scalar>(Y.rows());
}

template <typename Scalar>
struct HiddenCache {
    MatrixT<Scalar> input;
    MatrixT<Scalar> xhat;
    VectorT<Scalar> inv_std;
    MatrixT<Scalar> pre_relu;
    MatrixT<Scalar> mask; // empty when dropout is off
};

template <typename Scalar>
void write_tensor(std::string& out, const std::string& name, const MatrixT<Scalar>& m)
{
    out += "tensor " + name + " " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c)
                out += ' ';
            out += io::format_double(static_cast<double>(m(r, c)));
        }
        out += '\n';
    }
}

template <typename Scalar>
MatrixT<Scalar> read_tensor(std::istream& in, const std::string& name)
{
    std::string tag, got;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> tag >> got >> rows >> cols) || tag != "tensor" || got != name)
        throw ValidationError("checkpoint: expected tensor '" + name + "'");
    MatrixT<Scalar> m(rows, cols);
    std::string tok;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (!(in >> tok))
                throw ValidationError("checkpoint: truncated tensor '" + name + "'");
            m(r, c) = static_cast<Scalar>(io::parse_double(tok));
        }
    return m;
}

} // namespace

void MlpConfig::validate() const
{
    if (hidden_dims.empty())
        throw ConfigError("mlp: hidden_dims must be non-empty");
    for (int h : hidden_dims)
        if (h < 1)
            throw ConfigError("mlp: hidden dims must be positive");
    if (!(dropout >= 0.0 && dropout < 1.0))
        throw ConfigError("mlp: dropout must lie in [0, 1)");
    if (output_dim != kNumEmotions)
        throw ConfigError("mlp: output_dim must be 6");
    if (!(lr > 0.0) || !std::isfinite(lr))
        throw ConfigError("mlp: lr must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw ConfigError("mlp: momentum must lie in [0, 1)");
    if (max_epochs < 1 || batch_size < 2)
        throw ConfigError("mlp: max_epochs >= 1 and batch_size >= 2 required");
    if (patience < 0 || patience > max_epochs)
        throw ConfigError("mlp: patience must lie in [0, max_epochs]");
}

template <typename Scalar>
MatrixT<Scalar> batchnorm_forward(const MatrixT<Scalar>& batch, BatchNormT<Scalar>& bn, Mode mode)
{
    const Eigen::Index N = batch.rows();
    VectorT<Scalar> mean, var;
    if (mode == Mode::train) {
        if (N < 2)
            throw ValidationError("batchnorm: train mode needs at least 2 rows");
        mean = batch.colwise().mean().transpose();
        var = (batch.rowwise() - mean.transpose()).array().square().colwise().mean().transpose();
        const Scalar m = static_cast<Scalar>(kBatchNormMomentum);
        bn.running_mean = (1 - m) * bn.running_mean + m * mean;
        bn.running_var = (1 - m) * bn.running_var + m * var;
    } else {
        mean = bn.running_mean;
        var = bn.running_var;
    }
    const VectorT<Scalar> inv_std = (var.array() + static_cast<Scalar>(kBatchNormEpsilon)).rsqrt().matrix();
    MatrixT<Scalar> out = (batch.rowwise() - mean.transpose()) * inv_std.asDiagonal();
    out = out * bn.gamma.asDiagonal();
    out.rowwise() += bn.beta.transpose();
    return out;
}

template <typename Scalar>
MlpParamsT<Scalar> MlpParamsT<Scalar>::zeros_like() const
{
    MlpParamsT z = *this;
    z.visit([](auto& t) { t.setZero(); });
    return z;
}

template <typename Scalar>
Eigen::Index MlpParamsT<Scalar>::count() const
{
    Eigen::Index n = 0;
    const_cast<MlpParamsT*>(this)->visit([&](auto& t) { n += t.size(); });
    return n;
}

template <typename Scalar>
MlpModelT<Scalar>::MlpModelT(Eigen::Index input_dim, const MlpConfig& cfg)
    : cfg_(cfg), input_dim_(input_dim)
{
    cfg_.validate();
    if (input_dim < 1)
        throw ValidationError("mlp: input dimension must be positive");
    std::mt19937_64 rng(cfg_.seed);
    auto glorot = [&](Eigen::Index out, Eigen::Index in) {
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        MatrixT<Scalar> w(out, in);
        for (Eigen::Index r = 0; r < out; ++r)
            for (Eigen::Index c = 0; c < in; ++c)
                w(r, c) = static_cast<Scalar>((2.0 * unit_uniform(rng) - 1.0) * limit);
        return w;
    };
    Eigen::Index prev = input_dim;
    for (int h : cfg_.hidden_dims) {
        typename Params::Hidden layer;
        layer.weight = glorot(h, prev);
        layer.bias = VectorT<Scalar>::Zero(h);
        layer.gamma = VectorT<Scalar>::Ones(h);
        layer.beta = VectorT<Scalar>::Zero(h);
        params_.hidden.push_back(std::move(layer));
        bn_.emplace_back(h);
        prev = h;
    }
    params_.out_weight = glorot(cfg_.output_dim, prev);
    params_.out_bias = VectorT<Scalar>::Zero(cfg_.output_dim);
}

template <typename Scalar>
MatrixT<Scalar> MlpModelT<Scalar>::predict(const MatrixT<Scalar>& X) const
{
    if (X.cols() != input_dim_)
        throw ValidationError("mlp: input has " + std::to_string(X.cols()) + " features, model expects " +
                              std::to_string(input_dim_));
    MatrixT<Scalar> h = X;
    for (std::size_t i = 0; i < params_.hidden.size(); ++i) {
        const auto& layer = params_.hidden[i];
        MatrixT<Scalar> a = h * layer.weight.transpose();
        a.rowwise() += layer.bias.transpose();
        BatchNormT<Scalar> bn = bn_[i];
        bn.gamma = layer.gamma;
        bn.beta = layer.beta;
        h = batchnorm_forward<Scalar>(a, bn, Mode::eval).cwiseMax(Scalar(0));
    }
    MatrixT<Scalar> logits = h * params_.out_weight.transpose();
    logits.rowwise() += params_.out_bias.transpose();
    return softmax_rows<Scalar>(logits);
}

template <typename Scalar>
DistributionT<Scalar> MlpModelT<Scalar>::forward(const VectorT<Scalar>& x) const
{
    if (x.size() != input_dim_)
        throw ValidationError("mlp: input has " + std::to_string(x.size()) + " features, model expects " +
                              std::to_string(input_dim_));
    return predict(x.transpose()).row(0).transpose();
}

template <typename Scalar>
Scalar MlpModelT<Scalar>::mean_loss(const MatrixT<Scalar>& X, const MatrixT<Scalar>& Y) const
{
    return mean_kl<Scalar>(Y, predict(X));
}

template <typename Scalar>
Scalar MlpModelT<Scalar>::loss_and_gradient(const MatrixT<Scalar>& X, const MatrixT<Scalar>& Y, Params& grad,
                                            std::mt19937_64* rng, bool update_running)
{
    const Eigen::Index N = X.rows();
    if (X.cols() != input_dim_ || Y.rows() != N || Y.cols() != cfg_.output_dim)
        throw ValidationError("mlp: batch shape mismatch");
    if (N < 2)
        throw ValidationError("mlp: training batches need at least 2 rows");
    const Scalar eps = static_cast<Scalar>(kBatchNormEpsilon);
    const Scalar keep = static_cast<Scalar>(1.0 - cfg_.dropout);
    const bool use_dropout = cfg_.dropout > 0.0;
    if (use_dropout && rng == nullptr)
        throw ValidationError("mlp: dropout requires a random source");

    std::vector<HiddenCache<Scalar>> caches(params_.hidden.size());
    MatrixT<Scalar> h = X;
    for (std::size_t i = 0; i < params_.hidden.size(); ++i) {
        const auto& layer = params_.hidden[i];
        auto& c = caches[i];
        c.input = h;
        MatrixT<Scalar> a = h * layer.weight.transpose();
        a.rowwise() += layer.bias.transpose();
        const VectorT<Scalar> mean = a.colwise().mean().transpose();
        const VectorT<Scalar> var =
            (a.rowwise() - mean.transpose()).array().square().colwise().mean().transpose();
        if (update_running) {
            const Scalar m = static_cast<Scalar>(kBatchNormMomentum);
            bn_[i].running_mean = (1 - m) * bn_[i].running_mean + m * mean;
            bn_[i].running_var = (1 - m) * bn_[i].running_var + m * var;
        }
        c.inv_std = (var.array() + eps).rsqrt().matrix();
        c.xhat = (a.rowwise() - mean.transpose()) * c.inv_std.asDiagonal();
        c.pre_relu = c.xhat * layer.gamma.asDiagonal();
        c.pre_relu.rowwise() += layer.beta.transpose();
        h = c.pre_relu.cwiseMax(Scalar(0));
        if (use_dropout) {
            c.mask.resize(h.rows(), h.cols());
            for (Eigen::Index r = 0; r < h.rows(); ++r)
                for (Eigen::Index col = 0; col < h.cols(); ++col)
                    c.mask(r, col) = unit_uniform(*rng) < static_cast<double>(keep) ? Scalar(1) / keep : Scalar(0);
            h = h.cwiseProduct(c.mask);
        }
    }
    MatrixT<Scalar> logits = h * params_.out_weight.transpose();
    logits.rowwise() += params_.out_bias.transpose();
    const MatrixT<Scalar> P = softmax_rows<Scalar>(logits);
    const Scalar loss = mean_kl<Scalar>(Y, P);

    if (grad.hidden.size() != params_.hidden.size())
        grad = params_.zeros_like();
    const Scalar invN = Scalar(1) / static_cast<Scalar>(N);
    const MatrixT<Scalar> dlogits = (P - Y) * invN;
    grad.out_weight = dlogits.transpose() * h;
    grad.out_bias = dlogits.colwise().sum().transpose();
    MatrixT<Scalar> dh = dlogits * params_.out_weight;

    for (std::size_t k = params_.hidden.size(); k-- > 0;) {
        const auto& layer = params_.hidden[k];
        const auto& c = caches[k];
        if (use_dropout)
            dh = dh.cwiseProduct(c.mask);
        const MatrixT<Scalar> dz = (c.pre_relu.array() > Scalar(0)).select(dh, MatrixT<Scalar>::Zero(N, dh.cols()));
        grad.hidden[k].gamma = dz.cwiseProduct(c.xhat).colwise().sum().transpose();
        grad.hidden[k].beta = dz.colwise().sum().transpose();
        const MatrixT<Scalar> dxhat = dz * layer.gamma.asDiagonal();
        const auto sum_dxhat = dxhat.colwise().sum();
        const auto sum_dxhat_xhat = dxhat.cwiseProduct(c.xhat).colwise().sum();
        MatrixT<Scalar> da = (static_cast<Scalar>(N) * dxhat).rowwise() - sum_dxhat;
        da -= c.xhat * sum_dxhat_xhat.asDiagonal();
        da = da * (c.inv_std * invN).asDiagonal();
        grad.hidden[k].weight = da.transpose() * c.input;
        grad.hidden[k].bias = da.colwise().sum().transpose();
        dh = da * layer.weight;
    }
    return loss;
}

template <typename Scalar>
std::string MlpModelT<Scalar>::serialize() const
{
    std::string out = "blendfuse-mlp 1\n";
    out += "input_dim " + std::to_string(input_dim_) + "\n";
    out += "hidden_dims";
    for (int h : cfg_.hidden_dims)
        out += " " + std::to_string(h);
    out += "\n";
    out += "dropout " + io::format_double(cfg_.dropout) + "\n";
    out += "output_dim " + std::to_string(cfg_.output_dim) + "\n";
    out += "lr " + io::format_double(cfg_.lr) + "\n";
    out += "momentum " + io::format_double(cfg_.momentum) + "\n";
    out += "max_epochs " + std::to_string(cfg_.max_epochs) + "\n";
    out += "patience " + std::to_string(cfg_.patience) + "\n";
    out += "batch_size " + std::to_string(cfg_.batch_size) + "\n";
    out += "seed " + std::to_string(cfg_.seed) + "\n";
    for (std::size_t i = 0; i < params_.hidden.size(); ++i) {
        const std::string p = "hidden" + std::to_string(i) + ".";
        const auto& l = params_.hidden[i];
        write_tensor<Scalar>(out, p + "weight", l.weight);
        write_tensor<Scalar>(out, p + "bias", l.bias);
        write_tensor<Scalar>(out, p + "gamma", l.gamma);
        write_tensor<Scalar>(out, p + "beta", l.beta);
        write_tensor<Scalar>(out, p + "running_mean", bn_[i].running_mean);
        write_tensor<Scalar>(out, p + "running_var", bn_[i].running_var);
    }
    write_tensor<Scalar>(out, "out.weight", params_.out_weight);
    write_tensor<Scalar>(out, "out.bias", params_.out_bias);
    return out;
}

template <typename Scalar>
MlpModelT<Scalar> MlpModelT<Scalar>::deserialize(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "blendfuse-mlp 1")
        throw ValidationError("checkpoint: unsupported format header");
    auto field = [&](const std::string& key) {
        if (!std::getline(in, line))
            throw ValidationError("checkpoint: missing '" + key + "'");
        if (line.rfind(key + " ", 0) != 0 && line != key)
            throw ValidationError("checkpoint: expected '" + key + "', got '" + line + "'");
        return line.size() > key.size() ? line.substr(key.size() + 1) : std::string();
    };
    MlpModelT m;
    m.input_dim_ = io::parse_int(field("input_dim"));
    {
        std::istringstream hs(field("hidden_dims"));
        std::string tok;
        m.cfg_.hidden_dims.clear();
        while (hs >> tok)
            m.cfg_.hidden_dims.push_back(static_cast<int>(io::parse_int(tok)));
    }
    m.cfg_.dropout = io::parse_double(field("dropout"));
    m.cfg_.output_dim = static_cast<int>(io::parse_int(field("output_dim")));
    m.cfg_.lr = io::parse_double(field("lr"));
    m.cfg_.momentum = io::parse_double(field("momentum"));
    m.cfg_.max_epochs = static_cast<int>(io::parse_int(field("max_epochs")));
    m.cfg_.patience = static_cast<int>(io::parse_int(field("patience")));
    m.cfg_.batch_size = static_cast<int>(io::parse_int(field("batch_size")));
    m.cfg_.seed = static_cast<std::uint64_t>(std::stoull(field("seed")));
    m.cfg_.validate();

    Eigen::Index prev = m.input_dim_;
    for (std::size_t i = 0; i < m.cfg_.hidden_dims.size(); ++i) {
        const std::string p = "hidden" + std::to_string(i) + ".";
        const Eigen::Index h = m.cfg_.hidden_dims[i];
        typename Params::Hidden l;
        l.weight = read_tensor<Scalar>(in, p + "weight");
        l.bias = read_tensor<Scalar>(in, p + "bias");
        l.gamma = read_tensor<Scalar>(in, p + "gamma");
        l.beta = read_tensor<Scalar>(in, p + "beta");
        BatchNormT<Scalar> bn(h);
        bn.running_mean = read_tensor<Scalar>(in, p + "running_mean");
        bn.running_var = read_tensor<Scalar>(in, p + "running_var");
        if (l.weight.rows() != h || l.weight.cols() != prev || l.bias.size() != h || l.gamma.size() != h ||
            l.beta.size() != h || bn.running_mean.size() != h || bn.running_var.size() != h)
            throw ValidationError("checkpoint: layer " + std::to_string(i) + " shape mismatch");
        if ((bn.running_var.array() <= Scalar(0)).any())
            throw ValidationError("checkpoint: running variance must be positive");
        m.params_.hidden.push_back(std::move(l));
        m.bn_.push_back(std::move(bn));
        prev = h;
    }
    m.params_.out_weight = read_tensor<Scalar>(in, "out.weight");
    m.params_.out_bias = read_tensor<Scalar>(in, "out.bias");
    if (m.params_.out_weight.rows() != m.cfg_.output_dim || m.params_.out_weight.cols() != prev ||
        m.params_.out_bias.size() != m.cfg_.output_dim)
        throw ValidationError("checkpoint: output layer shape mismatch");
    return m;
}

template <typename Scalar>
void MlpModelT<Scalar>::save(const std::filesystem::path& path) const
{
    io::write_text(path, serialize());
}

template <typename Scalar>
MlpModelT<Scalar> MlpModelT<Scalar>::load(const std::filesystem::path& path)
{
    return deserialize(io::read_text(path));
}

template <typename Scalar>
TrainResultT<Scalar> train_mlp(const MatrixT<Scalar>& train_x, const MatrixT<Scalar>& train_y,
                               const MatrixT<Scalar>& val_x, const MatrixT<Scalar>& val_y, const MlpConfig& cfg)
{
    cfg.validate();
    const Eigen::Index N = train_x.rows();
    if (N < 2 || val_x.rows() < 1)
        throw ValidationError("train_mlp: need >= 2 training rows and >= 1 validation row");
    if (train_y.rows() != N || val_y.rows() != val_x.rows() || val_x.cols() != train_x.cols() ||
        train_y.cols() != cfg.output_dim || val_y.cols() != cfg.output_dim)
        throw ValidationError("train_mlp: inconsistent shapes");
    if (!train_x.allFinite() || !val_x.allFinite())
        throw NumericError("train_mlp: non-finite features");

    MlpModelT<Scalar> model(train_x.cols(), cfg);
    // Offset the stream so initialization and shuffling draw independent values.
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    auto velocity = model.params().zeros_like();
    MlpParamsT<Scalar> grad = velocity;

    TrainResultT<Scalar> result;
    result.model = model;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    int since_best = 0;

    std::vector<Eigen::Index> order(static_cast<std::size_t>(N));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        for (std::size_t i = order.size() - 1; i > 0; --i)
            std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);

        std::vector<std::pair<Eigen::Index, Eigen::Index>> batches;
        for (Eigen::Index s = 0; s < N; s += cfg.batch_size)
            batches.emplace_back(s, std::min<Eigen::Index>(cfg.batch_size, N - s));
        if (batches.size() > 1 && batches.back().second == 1) {
            batches[batches.size() - 2].second += 1;
            batches.pop_back();
        }

        model.set_mode(Mode::train);
        double epoch_loss = 0.0;
        for (auto [start, len] : batches) {
            MatrixT<Scalar> xb(len, train_x.cols()), yb(len, train_y.cols());
            for (Eigen::Index r = 0; r < len; ++r) {
                xb.row(r) = train_x.row(order[static_cast<std::size_t>(start + r)]);
                yb.row(r) = train_y.row(order[static_cast<std::size_t>(start + r)]);
            }
            const double loss = static_cast<double>(model.loss_and_gradient(xb, yb, grad, &rng, true));
            if (!std::isfinite(loss))
                throw NumericError("train_mlp: non-finite loss at epoch " + std::to_string(epoch));
            const Scalar lr = static_cast<Scalar>(cfg.lr);
            const Scalar mu = static_cast<Scalar>(cfg.momentum);
            velocity.zip(grad, [&](auto& v, auto& g) { v = mu * v - lr * g; });
            model.params().zip(velocity, [](auto& p, auto& v) { p += v; });
            epoch_loss += loss * static_cast<double>(len);
        }
        model.set_mode(Mode::eval);

        EpochLog entry{epoch, epoch_loss / static_cast<double>(N), static_cast<double>(model.mean_loss(val_x, val_y))};
        if (!std::isfinite(entry.train_loss) || !std::isfinite(entry.val_loss))
            throw NumericError("train_mlp: non-finite loss at epoch " + std::to_string(epoch) +
                               " (train " + std::to_string(entry.train_loss) + ", val " +
                               std::to_string(entry.val_loss) + ")");
        result.log.push_back(entry);

        if (entry.val_loss < result.best_val_loss) {
            result.best_val_loss = entry.val_loss;
            result.best_epoch = epoch;
            result.model = model;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    result.model.set_mode(Mode::eval);
    return result;
}

std::string format_training_log(const std::vector<EpochLog>& log)
{
    std::string out = "epoch,train_loss,val_loss\n";
    for (const auto& e : log)
        out += std::to_string(e.epoch) + "," + io::format_double(e.train_loss) + "," + io::format_double(e.val_loss) +
               "\n";
    return out;
}

template struct MlpParamsT<double>;
template struct MlpParamsT<float>;
template class MlpModelT<double>;
template class MlpModelT<float>;
template MatrixT<double> batchnorm_forward<double>(const MatrixT<double>&, BatchNormT<double>&, Mode);
template MatrixT<float> batchnorm_forward<float>(const MatrixT<float>&, BatchNormT<float>&, Mode);
template TrainResultT<double> train_mlp<double>(const MatrixT<double>&, const MatrixT<double>&,
                                                const MatrixT<double>&, const MatrixT<double>&, const MlpConfig&);
template TrainResultT<float> train_mlp<float>(const MatrixT<float>&, const MatrixT<float>&, const MatrixT<float>&,
                                              const MatrixT<float>&, const MlpConfig&);

} // namespace blendfuse
