#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace tryline {

// Flat parameter container. `grad` always mirrors `values` in length and is
// accumulated into by Tape::backward.
struct ParamTensor {
    std::vector<std::size_t> shape;
    std::vector<double> values;
    std::vector<double> grad;

    ParamTensor() = default;
    explicit ParamTensor(std::vector<std::size_t> dims);

    std::size_t size() const { return values.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() > 1 ? shape[1] : 1; }
    void zero_grad();
};

// Scalar activation helpers (numerically stable forms).
double sigmoid(double x);
double softplus(double x);

// Vector activations. These are the forward kernels; the Tape records the
// same math with backward rules attached.
std::vector<double> relu(std::span<const double> x);
std::vector<double> sigmoid(std::span<const double> x);
std::vector<double> softplus(std::span<const double> x);
std::vector<double> softmax(std::span<const double> x);
double log_sum_exp(std::span<const double> x);

using NodeId = std::uint32_t;

// Reverse-mode tape over vector-valued primitives. Records are kept in
// application order; backward replays them in reverse, accumulating adjoints
// for intermediate nodes and gradients for ParamTensors touched by dense /
// embed_sum / param records. Node values stay alive until reset(), so
// backward rules read their inputs straight from the value buffer.
class Tape {
public:
    NodeId leaf(std::span<const double> v);
    NodeId leaf(std::initializer_list<double> v);
    NodeId scalar_leaf(double v);
    // Leaf bound to a ParamTensor; adjoints flow into p.grad.
    NodeId param(ParamTensor& p);

    // y = W x (+ b). W is [out x in] row-major; bias may be null.
    NodeId dense(NodeId x, ParamTensor& weights, ParamTensor* bias);
    // Sum of selected rows of an embedding table [vocab x dim]. Equivalent to
    // a bias-free dense layer applied to the indicator with ones at `rows`.
    NodeId embed_sum(ParamTensor& table, std::span<const std::size_t> rows);

    NodeId relu(NodeId x);
    NodeId sigmoid(NodeId x);
    NodeId softplus(NodeId x);
    NodeId softmax(NodeId x);
    NodeId log_softmax(NodeId x);
    NodeId log_sum_exp(NodeId x);  // scalar output
    NodeId log(NodeId x);

    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId div(NodeId a, NodeId b);
    NodeId scale(NodeId x, double c);
    NodeId add_const(NodeId x, double c);

    NodeId concat(std::span<const NodeId> parts);
    NodeId slice(NodeId x, std::size_t offset, std::size_t count);
    // Sums consecutive groups of equal size; length(x) must divide evenly.
    NodeId group_sum(NodeId x, std::size_t n_groups);
    // Arithmetic mean of scalar nodes.
    NodeId mean(std::span<const NodeId> scalars);

    std::span<const double> value(NodeId id) const;
    double scalar(NodeId id) const;

    // Seeds d(loss)/d(loss) = 1 and propagates. loss must be a scalar node.
    void backward(NodeId loss);

    void reset();
    std::size_t node_count() const { return nodes_.size(); }

private:
    enum class Op : std::uint8_t {
        kLeaf, kParam, kDense, kEmbedSum,
        kRelu, kSigmoid, kSoftplus, kSoftmax, kLogSoftmax, kLogSumExp, kLog,
        kAdd, kSub, kMul, kDiv, kScale, kAddConst,
        kConcat, kSlice, kGroupSum, kMean,
    };
    struct Node {
        std::uint32_t off;
        std::uint32_t len;
    };
    struct Record {
        Op op;
        NodeId out;
        NodeId a = 0;
        NodeId b = 0;
        ParamTensor* w = nullptr;
        ParamTensor* bias = nullptr;
        double c = 0.0;
        std::uint32_t aux = 0;       // slice offset / group count
        std::uint32_t pool_off = 0;  // concat/mean argument list
        std::uint32_t pool_len = 0;
        std::array<std::uint32_t, 2> rows{};  // embed_sum active rows
        std::uint32_t n_rows = 0;
    };

    NodeId alloc(std::size_t len);
    double* data(NodeId id);
    const double* data(NodeId id) const;
    double* adj(NodeId id);
    void backward_record(const Record& r);

    std::vector<double> buf_;
    std::vector<double> adj_;
    std::vector<Node> nodes_;
    std::vector<Record> recs_;
    std::vector<NodeId> pool_;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Moment buffers cover the concatenation of all tensors passed to adam_step,
// in call order. The caller must keep that order stable across steps.
struct AdamState {
    AdamConfig cfg;
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
};

AdamState make_adam_state(std::span<ParamTensor* const> params, AdamConfig cfg = {});
// Applies one bias-corrected adaptive-moment update and zeroes grads.
// Throws std::runtime_error on a non-finite gradient (diverged training).
void adam_step(std::span<ParamTensor* const> params, AdamState& state);
void zero_grads(std::span<ParamTensor* const> params);

// Fan-scaled uniform init on +/- sqrt(6 / (fan_in + fan_out)).
void glorot_fill(ParamTensor& t, std::size_t fan_in, std::size_t fan_out,
                 std::mt19937_64& rng);

}  // namespace tryline
