#include "tryline/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tryline {

ParamTensor::ParamTensor(std::vector<std::size_t> dims) : shape(std::move(dims)) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    values.assign(n, 0.0);
    grad.assign(n, 0.0);
}

void ParamTensor::zero_grad() {
    std::fill(grad.begin(), grad.end(), 0.0);
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    // max(x, 0) + log1p(exp(-|x|)) never overflows.
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

std::vector<double> relu(std::span<const double> x) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

std::vector<double> sigmoid(std::span<const double> x) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = sigmoid(x[i]);
    return y;
}

std::vector<double> softplus(std::span<const double> x) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = softplus(x[i]);
    return y;
}

std::vector<double> softmax(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("softmax: empty input");
    const double m = *std::max_element(x.begin(), x.end());
    std::vector<double> y(x.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = std::exp(x[i] - m);
        sum += y[i];
    }
    for (double& v : y) v /= sum;
    return y;
}

double log_sum_exp(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("log_sum_exp: empty input");
    const double m = *std::max_element(x.begin(), x.end());
    if (!std::isfinite(m)) return m;  // all -inf (or an inf dominates)
    double sum = 0.0;
    for (double v : x) sum += std::exp(v - m);
    return m + std::log(sum);
}

// ---------------------------------------------------------------------------
// Tape

NodeId Tape::alloc(std::size_t len) {
    const NodeId id = static_cast<NodeId>(nodes_.size());
    nodes_.push_back({static_cast<std::uint32_t>(buf_.size()), static_cast<std::uint32_t>(len)});
    buf_.resize(buf_.size() + len, 0.0);
    return id;
}

double* Tape::data(NodeId id) { return buf_.data() + nodes_[id].off; }
const double* Tape::data(NodeId id) const { return buf_.data() + nodes_[id].off; }
double* Tape::adj(NodeId id) { return adj_.data() + nodes_[id].off; }

std::span<const double> Tape::value(NodeId id) const {
    if (id >= nodes_.size()) throw std::invalid_argument("Tape::value: bad node id");
    return {data(id), nodes_[id].len};
}

double Tape::scalar(NodeId id) const {
    auto v = value(id);
    if (v.size() != 1) throw std::invalid_argument("Tape::scalar: node is not scalar");
    return v[0];
}

NodeId Tape::leaf(std::span<const double> v) {
    const NodeId out = alloc(v.size());
    std::copy(v.begin(), v.end(), data(out));
    recs_.push_back({.op = Op::kLeaf, .out = out});
    return out;
}

NodeId Tape::leaf(std::initializer_list<double> v) {
    return leaf(std::span<const double>(v.begin(), v.size()));
}

NodeId Tape::scalar_leaf(double v) { return leaf({v}); }

NodeId Tape::param(ParamTensor& p) {
    const NodeId out = alloc(p.size());
    std::copy(p.values.begin(), p.values.end(), data(out));
    recs_.push_back({.op = Op::kParam, .out = out, .w = &p});
    return out;
}

NodeId Tape::dense(NodeId x, ParamTensor& weights, ParamTensor* bias) {
    if (weights.shape.size() != 2) {
        throw std::invalid_argument("dense: weights must be 2-D, got rank " +
                                    std::to_string(weights.shape.size()));
    }
    const std::size_t out_dim = weights.rows();
    const std::size_t in_dim = weights.cols();
    const std::size_t xlen = nodes_[x].len;
    if (xlen != in_dim) {
        throw std::invalid_argument("dense: input length " + std::to_string(xlen) +
                                    " does not match weight shape [" + std::to_string(out_dim) +
                                    " x " + std::to_string(in_dim) + "]");
    }
    if (bias && bias->size() != out_dim) {
        throw std::invalid_argument("dense: bias length " + std::to_string(bias->size()) +
                                    " does not match output dim " + std::to_string(out_dim));
    }
    const NodeId out = alloc(out_dim);
    const double* xv = data(x);
    double* y = data(out);
    const double* w = weights.values.data();
    for (std::size_t i = 0; i < out_dim; ++i) {
        double acc = bias ? bias->values[i] : 0.0;
        const double* wrow = w + i * in_dim;
        for (std::size_t j = 0; j < in_dim; ++j) acc += wrow[j] * xv[j];
        y[i] = acc;
    }
    recs_.push_back({.op = Op::kDense, .out = out, .a = x, .w = &weights, .bias = bias});
    return out;
}

NodeId Tape::embed_sum(ParamTensor& table, std::span<const std::size_t> rows) {
    if (table.shape.size() != 2) throw std::invalid_argument("embed_sum: table must be 2-D");
    if (rows.empty() || rows.size() > 2) {
        throw std::invalid_argument("embed_sum: expected 1 or 2 active rows");
    }
    const std::size_t dim = table.cols();
    for (std::size_t r : rows) {
        if (r >= table.rows()) {
            throw std::invalid_argument("embed_sum: row " + std::to_string(r) +
                                        " out of range for table with " +
                                        std::to_string(table.rows()) + " rows");
        }
    }
    const NodeId out = alloc(dim);
    double* y = data(out);
    for (std::size_t r : rows) {
        const double* row = table.values.data() + r * dim;
        for (std::size_t j = 0; j < dim; ++j) y[j] += row[j];
    }
    Record rec{.op = Op::kEmbedSum, .out = out, .w = &table};
    rec.n_rows = static_cast<std::uint32_t>(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rec.rows[i] = static_cast<std::uint32_t>(rows[i]);
    recs_.push_back(rec);
    return out;
}

NodeId Tape::relu(NodeId x) {
    const NodeId out = alloc(nodes_[x].len);
    const double* xv = data(x);
    double* y = data(out);
    for (std::uint32_t i = 0; i < nodes_[x].len; ++i) y[i] = xv[i] > 0.0 ? xv[i] : 0.0;
    recs_.push_back({.op = Op::kRelu, .out = out, .a = x});
    return out;
}

NodeId Tape::sigmoid(NodeId x) {
    const NodeId out = alloc(nodes_[x].len);
    const double* xv = data(x);
    double* y = data(out);
    for (std::uint32_t i = 0; i < nodes_[x].len; ++i) y[i] = tryline::sigmoid(xv[i]);
    recs_.push_back({.op = Op::kSigmoid, .out = out, .a = x});
    return out;
}

NodeId Tape::softplus(NodeId x) {
    const NodeId out = alloc(nodes_[x].len);
    const double* xv = data(x);
    double* y = data(out);
    for (std::uint32_t i = 0; i < nodes_[x].len; ++i) y[i] = tryline::softplus(xv[i]);
    recs_.push_back({.op = Op::kSoftplus, .out = out, .a = x});
    return out;
}

NodeId Tape::softmax(NodeId x) {
    const std::uint32_t n = nodes_[x].len;
    if (n == 0) throw std::invalid_argument("softmax: empty input");
    const NodeId out = alloc(n);
    const double* xv = data(x);
    double* y = data(out);
    const double m = *std::max_element(xv, xv + n);
    double sum = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) {
        y[i] = std::exp(xv[i] - m);
        sum += y[i];
    }
    for (std::uint32_t i = 0; i < n; ++i) y[i] /= sum;
    recs_.push_back({.op = Op::kSoftmax, .out = out, .a = x});
    return out;
}

NodeId Tape::log_softmax(NodeId x) {
    const std::uint32_t n = nodes_[x].len;
    if (n == 0) throw std::invalid_argument("log_softmax: empty input");
    const NodeId out = alloc(n);
    const double* xv = data(x);
    double* y = data(out);
    const double lse = tryline::log_sum_exp({xv, n});
    for (std::uint32_t i = 0; i < n; ++i) y[i] = xv[i] - lse;
    recs_.push_back({.op = Op::kLogSoftmax, .out = out, .a = x});
    return out;
}

NodeId Tape::log_sum_exp(NodeId x) {
    const NodeId out = alloc(1);
    data(out)[0] = tryline::log_sum_exp(value(x));
    recs_.push_back({.op = Op::kLogSumExp, .out = out, .a = x});
    return out;
}

NodeId Tape::log(NodeId x) {
    const NodeId out = alloc(nodes_[x].len);
    const double* xv = data(x);
    double* y = data(out);
    for (std::uint32_t i = 0; i < nodes_[x].len; ++i) y[i] = std::log(xv[i]);
    recs_.push_back({.op = Op::kLog, .out = out, .a = x});
    return out;
}

namespace {
void check_same_len(std::uint32_t a, std::uint32_t b, const char* op) {
    if (a != b) {
        throw std::invalid_argument(std::string(op) + ": length mismatch " +
                                    std::to_string(a) + " vs " + std::to_string(b));
    }
}
}  // namespace

NodeId Tape::add(NodeId a, NodeId b) {
    check_same_len(nodes_[a].len, nodes_[b].len, "add");
    const NodeId out = alloc(nodes_[a].len);
    const double *av = data(a), *bv = data(b);
    double* y = data(out);
    for (std::uint32_t i = 0; i < nodes_[a].len; ++i) y[i] = av[i] + bv[i];
    recs_.push_back({.op = Op::kAdd, .out = out, .a = a, .b = b});
    return out;
}

NodeId Tape::sub(NodeId a, NodeId b) {
    check_same_len(nodes_[a].len, nodes_[b].len, "sub");
    const NodeId out = alloc(nodes_[a].len);
    const double *av = data(a), *bv = data(b);
    double* y = data(out);
    for (std::uint32_t i = 0; i < nodes_[a].len; ++i) y[i] = av[i] - bv[i];
    recs_.push_back({.op = Op::kSub, .out = out, .a = a, .b = b});
    return out;
}

NodeId Tape::mul(NodeId a, NodeId b) {
    check_same_len(nodes_[a].len, nodes_[b].len, "mul");
    const NodeId out = alloc(nodes_[a].len);
    const double *av = data(a), *bv = data(b);
    double* y = data(out);
    for (std::uint32_t i = 0; i < nodes_[a].len; ++i) y[i] = av[i] * bv[i];
    recs_.push_back({.op = Op::kMul, .out = out, .a = a, .b = b});
    return out;
}

NodeId Tape::div(NodeId a, NodeId b) {
    check_same_len(nodes_[a].len, nodes_[b].len, "div");
    const NodeId out = alloc(nodes_[a].len);
    const double *av = data(a), *bv = data(b);
    double* y = data(out);
    for (std::uint32_t i = 0; i < nodes_[a].len; ++i) y[i] = av[i] / bv[i];
    recs_.push_back({.op = Op::kDiv, .out = out, .a = a, .b = b});
    return out;
}

NodeId Tape::scale(NodeId x, double c) {
    const NodeId out = alloc(nodes_[x].len);
    const double* xv = data(x);
    double* y = data(out);
    for (std::uint32_t i = 0; i < nodes_[x].len; ++i) y[i] = xv[i] * c;
    recs_.push_back({.op = Op::kScale, .out = out, .a = x, .c = c});
    return out;
}

NodeId Tape::add_const(NodeId x, double c) {
    const NodeId out = alloc(nodes_[x].len);
    const double* xv = data(x);
    double* y = data(out);
    for (std::uint32_t i = 0; i < nodes_[x].len; ++i) y[i] = xv[i] + c;
    recs_.push_back({.op = Op::kAddConst, .out = out, .a = x, .c = c});
    return out;
}

NodeId Tape::concat(std::span<const NodeId> parts) {
    if (parts.empty()) throw std::invalid_argument("concat: no parts");
    std::size_t total = 0;
    for (NodeId p : parts) total += nodes_[p].len;
    const NodeId out = alloc(total);
    double* y = data(out);
    Record rec{.op = Op::kConcat, .out = out};
    rec.pool_off = static_cast<std::uint32_t>(pool_.size());
    rec.pool_len = static_cast<std::uint32_t>(parts.size());
    for (NodeId p : parts) {
        pool_.push_back(p);
        const double* pv = data(p);
        y = std::copy(pv, pv + nodes_[p].len, y);
    }
    recs_.push_back(rec);
    return out;
}

NodeId Tape::slice(NodeId x, std::size_t offset, std::size_t count) {
    if (offset + count > nodes_[x].len) throw std::invalid_argument("slice: out of range");
    const NodeId out = alloc(count);
    const double* xv = data(x) + offset;
    std::copy(xv, xv + count, data(out));
    recs_.push_back({.op = Op::kSlice, .out = out, .a = x, .aux = static_cast<std::uint32_t>(offset)});
    return out;
}

NodeId Tape::group_sum(NodeId x, std::size_t n_groups) {
    const std::uint32_t n = nodes_[x].len;
    if (n_groups == 0 || n % n_groups != 0) {
        throw std::invalid_argument("group_sum: length not divisible by group count");
    }
    const std::size_t gsize = n / n_groups;
    const NodeId out = alloc(n_groups);
    const double* xv = data(x);
    double* y = data(out);
    for (std::size_t g = 0; g < n_groups; ++g) {
        double acc = 0.0;
        for (std::size_t j = 0; j < gsize; ++j) acc += xv[g * gsize + j];
        y[g] = acc;
    }
    recs_.push_back({.op = Op::kGroupSum, .out = out, .a = x, .aux = static_cast<std::uint32_t>(n_groups)});
    return out;
}

NodeId Tape::mean(std::span<const NodeId> scalars) {
    if (scalars.empty()) throw std::invalid_argument("mean: empty input");
    const NodeId out = alloc(1);
    Record rec{.op = Op::kMean, .out = out};
    rec.pool_off = static_cast<std::uint32_t>(pool_.size());
    rec.pool_len = static_cast<std::uint32_t>(scalars.size());
    double acc = 0.0;
    for (NodeId s : scalars) {
        if (nodes_[s].len != 1) throw std::invalid_argument("mean: inputs must be scalars");
        pool_.push_back(s);
        acc += data(s)[0];
    }
    data(out)[0] = acc / static_cast<double>(scalars.size());
    recs_.push_back(rec);
    return out;
}

void Tape::backward(NodeId loss) {
    if (loss >= nodes_.size() || nodes_[loss].len != 1) {
        throw std::invalid_argument("backward: loss must be a scalar node on this tape");
    }
    adj_.assign(buf_.size(), 0.0);
    adj(loss)[0] = 1.0;
    for (auto it = recs_.rbegin(); it != recs_.rend(); ++it) backward_record(*it);
}

void Tape::backward_record(const Record& r) {
    const std::uint32_t n = nodes_[r.out].len;
    const double* d = adj(r.out);  // adjoint of the output
    switch (r.op) {
        case Op::kLeaf:
            break;
        case Op::kParam: {
            for (std::uint32_t i = 0; i < n; ++i) r.w->grad[i] += d[i];
            break;
        }
        case Op::kDense: {
            const std::size_t in_dim = r.w->cols();
            const double* xv = data(r.a);
            double* xadj = adj(r.a);
            const double* w = r.w->values.data();
            double* wg = r.w->grad.data();
            for (std::uint32_t i = 0; i < n; ++i) {
                const double di = d[i];
                if (di == 0.0) continue;
                const double* wrow = w + i * in_dim;
                double* wgrow = wg + i * in_dim;
                for (std::size_t j = 0; j < in_dim; ++j) {
                    xadj[j] += wrow[j] * di;
                    wgrow[j] += xv[j] * di;
                }
                if (r.bias) r.bias->grad[i] += di;
            }
            break;
        }
        case Op::kEmbedSum: {
            const std::size_t dim = r.w->cols();
            for (std::uint32_t k = 0; k < r.n_rows; ++k) {
                double* row = r.w->grad.data() + r.rows[k] * dim;
                for (std::size_t j = 0; j < dim; ++j) row[j] += d[j];
            }
            break;
        }
        case Op::kRelu: {
            const double* xv = data(r.a);
            double* xadj = adj(r.a);
            for (std::uint32_t i = 0; i < n; ++i)
                if (xv[i] > 0.0) xadj[i] += d[i];
            break;
        }
        case Op::kSigmoid: {
            const double* y = data(r.out);
            double* xadj = adj(r.a);
            for (std::uint32_t i = 0; i < n; ++i) xadj[i] += d[i] * y[i] * (1.0 - y[i]);
            break;
        }
        case Op::kSoftplus: {
            const double* xv = data(r.a);
            double* xadj = adj(r.a);
            for (std::uint32_t i = 0; i < n; ++i) xadj[i] += d[i] * tryline::sigmoid(xv[i]);
            break;
        }
        case Op::kSoftmax: {
            const double* y = data(r.out);
            double* xadj = adj(r.a);
            double dot = 0.0;
            for (std::uint32_t i = 0; i < n; ++i) dot += d[i] * y[i];
            for (std::uint32_t i = 0; i < n; ++i) xadj[i] += y[i] * (d[i] - dot);
            break;
        }
        case Op::kLogSoftmax: {
            const double* y = data(r.out);
            double* xadj = adj(r.a);
            double sum = 0.0;
            for (std::uint32_t i = 0; i < n; ++i) sum += d[i];
            for (std::uint32_t i = 0; i < n; ++i) xadj[i] += d[i] - std::exp(y[i]) * sum;
            break;
        }
        case Op::kLogSumExp: {
            const double lse = data(r.out)[0];
            const double* xv = data(r.a);
            double* xadj = adj(r.a);
            const std::uint32_t xn = nodes_[r.a].len;
            for (std::uint32_t i = 0; i < xn; ++i) xadj[i] += d[0] * std::exp(xv[i] - lse);
            break;
        }
        case Op::kLog: {
            const double* xv = data(r.a);
            double* xadj = adj(r.a);
            for (std::uint32_t i = 0; i < n; ++i) xadj[i] += d[i] / xv[i];
            break;
        }
        case Op::kAdd: {
            double *aa = adj(r.a), *ba = adj(r.b);
            for (std::uint32_t i = 0; i < n; ++i) {
                aa[i] += d[i];
                ba[i] += d[i];
            }
            break;
        }
        case Op::kSub: {
            double *aa = adj(r.a), *ba = adj(r.b);
            for (std::uint32_t i = 0; i < n; ++i) {
                aa[i] += d[i];
                ba[i] -= d[i];
            }
            break;
        }
        case Op::kMul: {
            const double *av = data(r.a), *bv = data(r.b);
            double *aa = adj(r.a), *ba = adj(r.b);
            for (std::uint32_t i = 0; i < n; ++i) {
                aa[i] += d[i] * bv[i];
                ba[i] += d[i] * av[i];
            }
            break;
        }
        case Op::kDiv: {
            const double *av = data(r.a), *bv = data(r.b);
            double *aa = adj(r.a), *ba = adj(r.b);
            for (std::uint32_t i = 0; i < n; ++i) {
                aa[i] += d[i] / bv[i];
                ba[i] -= d[i] * av[i] / (bv[i] * bv[i]);
            }
            break;
        }
        case Op::kScale: {
            double* xadj = adj(r.a);
            for (std::uint32_t i = 0; i < n; ++i) xadj[i] += d[i] * r.c;
            break;
        }
        case Op::kAddConst: {
            double* xadj = adj(r.a);
            for (std::uint32_t i = 0; i < n; ++i) xadj[i] += d[i];
            break;
        }
        case Op::kConcat: {
            std::size_t off = 0;
            for (std::uint32_t k = 0; k < r.pool_len; ++k) {
                const NodeId p = pool_[r.pool_off + k];
                double* padj = adj(p);
                for (std::uint32_t i = 0; i < nodes_[p].len; ++i) padj[i] += d[off + i];
                off += nodes_[p].len;
            }
            break;
        }
        case Op::kSlice: {
            double* xadj = adj(r.a) + r.aux;
            for (std::uint32_t i = 0; i < n; ++i) xadj[i] += d[i];
            break;
        }
        case Op::kGroupSum: {
            const std::uint32_t gsize = nodes_[r.a].len / r.aux;
            double* xadj = adj(r.a);
            for (std::uint32_t g = 0; g < r.aux; ++g)
                for (std::uint32_t j = 0; j < gsize; ++j) xadj[g * gsize + j] += d[g];
            break;
        }
        case Op::kMean: {
            const double w = 1.0 / static_cast<double>(r.pool_len);
            for (std::uint32_t k = 0; k < r.pool_len; ++k) adj(pool_[r.pool_off + k])[0] += d[0] * w;
            break;
        }
    }
}

void Tape::reset() {
    buf_.clear();
    adj_.clear();
    nodes_.clear();
    recs_.clear();
    pool_.clear();
}

// ---------------------------------------------------------------------------
// Optimizer

AdamState make_adam_state(std::span<ParamTensor* const> params, AdamConfig cfg) {
    std::size_t n = 0;
    for (const ParamTensor* p : params) n += p->size();
    AdamState s;
    s.cfg = cfg;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    return s;
}

void adam_step(std::span<ParamTensor* const> params, AdamState& state) {
    std::size_t n = 0;
    for (const ParamTensor* p : params) n += p->size();
    if (n != state.m.size()) {
        throw std::invalid_argument("adam_step: state sized for " + std::to_string(state.m.size()) +
                                    " parameters, got " + std::to_string(n));
    }
    for (const ParamTensor* p : params) {
        for (double g : p->grad) {
            if (!std::isfinite(g)) {
                throw std::runtime_error("adam_step: non-finite gradient at step " +
                                         std::to_string(state.step + 1) + " (training diverged)");
            }
        }
    }
    state.step += 1;
    const auto& c = state.cfg;
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
    std::size_t k = 0;
    for (ParamTensor* p : params) {
        for (std::size_t i = 0; i < p->size(); ++i, ++k) {
            const double g = p->grad[i];
            state.m[k] = c.beta1 * state.m[k] + (1.0 - c.beta1) * g;
            state.v[k] = c.beta2 * state.v[k] + (1.0 - c.beta2) * g * g;
            const double mhat = state.m[k] / bc1;
            const double vhat = state.v[k] / bc2;
            p->values[i] -= c.lr * mhat / (std::sqrt(vhat) + c.eps);
        }
        p->zero_grad();
    }
}

void zero_grads(std::span<ParamTensor* const> params) {
    for (ParamTensor* p : params) p->zero_grad();
}

void glorot_fill(ParamTensor& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.values) v = dist(rng);
}

}  // namespace tryline
