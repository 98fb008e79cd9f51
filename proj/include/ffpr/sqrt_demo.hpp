#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include "errors.hpp"
#include "random.hpp"

// Square-root toy problem: learn x from y = x^2. Raw targets carry the sign
// ambiguity {+x, -x}; broken targets |x| pick one representative per class.
namespace ffpr::sqrt_demo {

struct ScalarDataset {
    std::vector<double> inputs;   // y = x^2
    std::vector<double> targets;  // x, or |x| when broken
    bool broken = false;
    double density = 0.0;  // samples per unit of x
};

/// Draw n values x ~ U[-3, 3] and pair x^2 with x (raw) or |x| (broken).
inline ScalarDataset build_sqrt_dataset(std::size_t n, bool break_symmetry, std::uint64_t seed) {
    if (n == 0) throw InvalidArgument("sqrt dataset needs at least one sample");
    RandomStream rng(seed);
    ScalarDataset d;
    d.broken = break_symmetry;
    d.density = static_cast<double>(n) / 6.0;
    d.inputs.reserve(n);
    d.targets.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.uniform(-3.0, 3.0);
        d.inputs.push_back(x * x);
        d.targets.push_back(break_symmetry ? std::abs(x) : x);
    }
    return d;
}

enum class Activation { Relu, Tanh };

/// Batch normalization is replaced by input standardization plus fan-in scaled
/// initialization.
struct MlpConfig {
    std::size_t layers = 6;  // affine layers, so layers - 1 hidden layers
    std::size_t hidden_width = 100;
    Activation activation = Activation::Relu;
    std::size_t epochs = 200;
    /// Shuffled mini-batches; 0 selects full-batch gradient descent.
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    /// Cosine annealing over the epochs, from learning_rate down to
    /// learning_rate * final_lr_fraction. 1 keeps the step constant.
    double final_lr_fraction = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 0;

    void validate() const {
        if (layers < 2) throw InvalidArgument("an MLP needs at least two layers");
        if (hidden_width == 0) throw InvalidArgument("hidden width must be positive");
        if (epochs == 0) throw InvalidArgument("training needs at least one epoch");
        if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
        if (!(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0)) {
            throw InvalidArgument("final learning-rate fraction must lie in (0, 1]");
        }
    }
};

class Mlp {
public:
    using Matrix = Eigen::MatrixXd;
    using Vector = Eigen::VectorXd;

    Mlp() = default;

    /// Fan-in scaled Gaussian initialization (2/fan_in for ReLU, 1/fan_in for tanh), zero biases.
    static Mlp initialize(const MlpConfig& config, RandomStream& rng) {
        config.validate();
        Mlp m;
        m.activation_ = config.activation;
        for (std::size_t l = 0; l < config.layers; ++l) {
            const std::size_t in = l == 0 ? 1 : config.hidden_width;
            const std::size_t out = l + 1 == config.layers ? 1 : config.hidden_width;
            const double gain = config.activation == Activation::Relu ? 2.0 : 1.0;
            const double stddev = std::sqrt(gain / static_cast<double>(in));
            Matrix w(out, in);
            for (Eigen::Index j = 0; j < w.cols(); ++j) {
                for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = stddev * rng.normal();
            }
            m.weights_.push_back(std::move(w));
            m.biases_.push_back(Vector::Zero(static_cast<Eigen::Index>(out)));
        }
        return m;
    }

    void set_input_standardization(double mean, double scale) {
        input_mean_ = mean;
        input_scale_ = scale > 0.0 ? scale : 1.0;
    }

    std::size_t layer_count() const { return weights_.size(); }

    Eigen::RowVectorXd predict(const Eigen::RowVectorXd& inputs) const {
        Matrix a = standardize(inputs);
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            Matrix h = (weights_[l] * a).colwise() + biases_[l];
            a = l + 1 == weights_.size() ? h : activate(h);
        }
        return a.row(0);
    }

    double predict(double y) const {
        Eigen::RowVectorXd in(1);
        in(0) = y;
        return predict(in)(0);
    }

    struct Gradients {
        std::vector<Matrix> weights;
        std::vector<Vector> biases;
    };

    /// Mean squared error over the batch and its gradient by backpropagation.
    double loss_and_gradient(const Eigen::RowVectorXd& inputs, const Eigen::RowVectorXd& targets,
                             Gradients& grad) const {
        const std::size_t L = weights_.size();
        const auto batch = static_cast<double>(inputs.size());
        std::vector<Matrix> pre(L), post(L + 1);
        post[0] = standardize(inputs);
        for (std::size_t l = 0; l < L; ++l) {
            pre[l] = (weights_[l] * post[l]).colwise() + biases_[l];
            post[l + 1] = l + 1 == L ? pre[l] : activate(pre[l]);
        }
        const Eigen::RowVectorXd err = post[L].row(0) - targets;
        const double loss = err.squaredNorm() / batch;

        grad.weights.resize(L);
        grad.biases.resize(L);
        Matrix delta = (2.0 / batch) * err;
        for (std::size_t l = L; l-- > 0;) {
            if (l + 1 != L) delta = delta.cwiseProduct(activation_derivative(pre[l]));
            grad.weights[l] = delta * post[l].transpose();
            grad.biases[l] = delta.rowwise().sum();
            if (l > 0) delta = weights_[l].transpose() * delta;
        }
        return loss;
    }

    /// Flat parameter view, used by finite-difference checks and Adam.
    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
        return n;
    }

    double& parameter(std::size_t index) {
        for (std::size_t l = 0; l < weights_.size(); ++l) {
            const auto w = static_cast<std::size_t>(weights_[l].size());
            if (index < w) return weights_[l].data()[index];
            index -= w;
            const auto b = static_cast<std::size_t>(biases_[l].size());
            if (index < b) return biases_[l].data()[index];
            index -= b;
        }
        throw InvalidArgument("parameter index out of range");
    }

    static std::vector<double> flatten(const Gradients& g) {
        std::vector<double> flat;
        for (std::size_t l = 0; l < g.weights.size(); ++l) {
            flat.insert(flat.end(), g.weights[l].data(), g.weights[l].data() + g.weights[l].size());
            flat.insert(flat.end(), g.biases[l].data(), g.biases[l].data() + g.biases[l].size());
        }
        return flat;
    }

private:
    Matrix standardize(const Eigen::RowVectorXd& inputs) const {
        return ((inputs.array() - input_mean_) / input_scale_).matrix();
    }

    Matrix activate(const Matrix& h) const {
        if (activation_ == Activation::Relu) return h.cwiseMax(0.0);
        return h.array().tanh().matrix();
    }

    Matrix activation_derivative(const Matrix& h) const {
        if (activation_ == Activation::Relu) return (h.array() > 0.0).cast<double>().matrix();
        return (1.0 - h.array().tanh().square()).matrix();
    }

    std::vector<Matrix> weights_;
    std::vector<Vector> biases_;
    double input_mean_ = 0.0;
    double input_scale_ = 1.0;
    Activation activation_ = Activation::Relu;
};

struct TrainResult {
    Mlp model;
    std::vector<double> loss_curve;  // mean training loss per epoch
    double final_train_mse = 0.0;    // full-dataset MSE of the final model
};

inline Eigen::RowVectorXd to_row(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline double mean_squared_error(const Mlp& model, const ScalarDataset& data) {
    const Eigen::RowVectorXd pred = model.predict(to_row(data.inputs));
    return (pred - to_row(data.targets)).squaredNorm() / static_cast<double>(data.inputs.size());
}

/// Adam on the mean squared error. Initialization and shuffling draw from
/// separate substreams of config.seed.
inline TrainResult train_mlp(const ScalarDataset& data, const MlpConfig& config) {
    config.validate();
    const std::size_t n = data.inputs.size();
    if (n == 0 || data.targets.size() != n) throw InvalidArgument("training needs a nonempty, consistent dataset");

    RandomStream init_rng = RandomStream::substream(config.seed, 0);
    RandomStream shuffle_rng = RandomStream::substream(config.seed, 1);

    TrainResult result;
    result.model = Mlp::initialize(config, init_rng);
    const double mean = std::accumulate(data.inputs.begin(), data.inputs.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : data.inputs) var += (v - mean) * (v - mean);
    result.model.set_input_standardization(mean, std::sqrt(var / static_cast<double>(n)));

    const std::size_t batch = config.batch_size != 0 ? std::min(config.batch_size, n) : n;
    const std::size_t params = result.model.parameter_count();
    std::vector<double> m1(params, 0.0), m2(params, 0.0);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Mlp::Gradients grad;
    std::uint64_t step = 0;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (batch < n) {
            for (std::size_t i = n - 1; i > 0; --i) {
                std::swap(order[i], order[static_cast<std::size_t>(shuffle_rng.integer(0, static_cast<std::int64_t>(i)))]);
            }
        }
        const double progress = config.epochs > 1 ? static_cast<double>(epoch) / static_cast<double>(config.epochs - 1) : 0.0;
        const double lr = config.learning_rate *
                          (config.final_lr_fraction +
                           (1.0 - config.final_lr_fraction) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t len = std::min(batch, n - start);
            Eigen::RowVectorXd in(static_cast<Eigen::Index>(len)), tg(static_cast<Eigen::Index>(len));
            for (std::size_t j = 0; j < len; ++j) {
                in(static_cast<Eigen::Index>(j)) = data.inputs[order[start + j]];
                tg(static_cast<Eigen::Index>(j)) = data.targets[order[start + j]];
            }
            const double loss = result.model.loss_and_gradient(in, tg, grad);
            if (!std::isfinite(loss)) throw DivergenceError("training loss became non-finite at epoch " + std::to_string(epoch));
            epoch_loss += loss * static_cast<double>(len);

            ++step;
            const std::vector<double> g = Mlp::flatten(grad);
            const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
            for (std::size_t p = 0; p < params; ++p) {
                m1[p] = config.beta1 * m1[p] + (1.0 - config.beta1) * g[p];
                m2[p] = config.beta2 * m2[p] + (1.0 - config.beta2) * g[p] * g[p];
                result.model.parameter(p) -=
                    lr * (m1[p] / c1) / (std::sqrt(m2[p] / c2) + config.adam_epsilon);
            }
        }
        result.loss_curve.push_back(epoch_loss / static_cast<double>(n));
    }
    result.final_train_mse = mean_squared_error(result.model, data);
    if (!std::isfinite(result.final_train_mse)) throw DivergenceError("final training loss is non-finite");
    return result;
}

struct SqrtPrediction {
    double y;
    double prediction;
    double reference;  // sqrt(y)
};

inline std::vector<SqrtPrediction> evaluate_sqrt(const Mlp& model, const std::vector<double>& grid) {
    std::vector<SqrtPrediction> out;
    if (grid.empty()) return out;
    const Eigen::RowVectorXd pred = model.predict(to_row(grid));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out.push_back({grid[i], pred(static_cast<Eigen::Index>(i)), std::sqrt(std::max(0.0, grid[i]))});
    }
    return out;
}

/// Evenly spaced grid on [0, 9], the image of [-3, 3] under squaring.
inline std::vector<double> default_grid(std::size_t points = 181) {
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i) g[i] = points == 1 ? 0.0 : 9.0 * static_cast<double>(i) / static_cast<double>(points - 1);
    return g;
}

}  // namespace ffpr::sqrt_demo
