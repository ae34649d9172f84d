#include "lscl/autograd.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lscl::autograd {

const Matrix& Var::value() const { return tape->value(*this); }

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

Var Tape::push(Matrix value, bool needs_grad, std::function<void(Tape&, int)> fn) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    n.backward_fn = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size() - 1)};
}

void Tape::accumulate(int id, const Matrix& g) {
    Node& n = node(id);
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
        n.grad = g;
    } else {
        n.grad += g;
    }
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::parameter(const Matrix& value, Matrix* grad_sink) {
    Var v = push(value, grad_sink != nullptr, [](Tape& t, int id) {
        Node& n = t.node(id);
        if (n.grad_sink) *n.grad_sink += n.grad;
    });
    node(v.id).grad_sink = grad_sink;
    return v;
}

Var Tape::matmul(Var a, Var b) {
    const bool ng = node(a.id).needs_grad || node(b.id).needs_grad;
    return push(value(a) * value(b), ng, [a, b](Tape& t, int id) {
        const Matrix& g = t.node(id).grad;
        if (t.node(a.id).needs_grad) t.accumulate(a.id, g * t.value(b).transpose());
        if (t.node(b.id).needs_grad) t.accumulate(b.id, t.value(a).transpose() * g);
    });
}

Var Tape::add(Var a, Var b) {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols()) {
        throw std::invalid_argument("autograd::add: shape mismatch");
    }
    const bool ng = node(a.id).needs_grad || node(b.id).needs_grad;
    return push(value(a) + value(b), ng, [a, b](Tape& t, int id) {
        const Matrix& g = t.node(id).grad;
        t.accumulate(a.id, g);
        t.accumulate(b.id, g);
    });
}

Var Tape::add_row(Var a, Var b) {
    if (value(b).rows() != 1 || value(b).cols() != value(a).cols()) {
        throw std::invalid_argument("autograd::add_row: shape mismatch");
    }
    Matrix out = value(a).rowwise() + value(b).row(0);
    const bool ng = node(a.id).needs_grad || node(b.id).needs_grad;
    return push(std::move(out), ng, [a, b](Tape& t, int id) {
        const Matrix& g = t.node(id).grad;
        t.accumulate(a.id, g);
        t.accumulate(b.id, g.colwise().sum());
    });
}

Var Tape::scale(Var a, double s) {
    return push(value(a) * s, node(a.id).needs_grad, [a, s](Tape& t, int id) { t.accumulate(a.id, t.node(id).grad * s); });
}

Var Tape::transpose(Var a) {
    return push(value(a).transpose(), node(a.id).needs_grad,
                [a](Tape& t, int id) { t.accumulate(a.id, t.node(id).grad.transpose()); });
}

Var Tape::gelu(Var a) {
    Matrix out = value(a).unaryExpr([](double x) { return autograd::gelu(x); });
    return push(std::move(out), node(a.id).needs_grad, [a](Tape& t, int id) {
        Matrix d = t.value(a).unaryExpr([](double x) { return gelu_derivative(x); });
        t.accumulate(a.id, t.node(id).grad.cwiseProduct(d));
    });
}

Var Tape::sigmoid(Var a) {
    Matrix out = value(a).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    return push(std::move(out), node(a.id).needs_grad, [a](Tape& t, int id) {
        const Matrix& s = t.node(id).value;
        Matrix d = s.cwiseProduct((Matrix::Ones(s.rows(), s.cols()) - s));
        t.accumulate(a.id, t.node(id).grad.cwiseProduct(d));
    });
}

Var Tape::softmax_rows(Var a) {
    const Matrix& x = value(a);
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const double mx = x.row(r).maxCoeff();
        Eigen::RowVectorXd e = (x.row(r).array() - mx).exp().matrix();
        out.row(r) = e / e.sum();
    }
    return push(std::move(out), node(a.id).needs_grad, [a](Tape& t, int id) {
        const Matrix& s = t.node(id).value;
        const Matrix& g = t.node(id).grad;
        Matrix d(s.rows(), s.cols());
        for (Eigen::Index r = 0; r < s.rows(); ++r) {
            const double dot = g.row(r).dot(s.row(r));
            d.row(r) = s.row(r).cwiseProduct((g.row(r).array() - dot).matrix());
        }
        t.accumulate(a.id, d);
    });
}

Var Tape::mean_rows(Var a) {
    const Matrix& x = value(a);
    if (x.rows() == 0) throw std::invalid_argument("autograd::mean_rows: empty input");
    Matrix out = x.colwise().mean();
    const auto n = x.rows();
    return push(std::move(out), node(a.id).needs_grad, [a, n](Tape& t, int id) {
        const Matrix& g = t.node(id).grad;
        t.accumulate(a.id, g.replicate(n, 1) / static_cast<double>(n));
    });
}

Var Tape::concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw std::invalid_argument("autograd::concat_cols: no inputs");
    const auto rows = value(parts[0]).rows();
    Eigen::Index cols = 0;
    bool ng = false;
    for (const Var& p : parts) {
        if (value(p).rows() != rows) throw std::invalid_argument("autograd::concat_cols: row mismatch");
        cols += value(p).cols();
        ng = ng || node(p.id).needs_grad;
    }
    Matrix out(rows, cols);
    Eigen::Index at = 0;
    for (const Var& p : parts) {
        out.middleCols(at, value(p).cols()) = value(p);
        at += value(p).cols();
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return push(std::move(out), ng, [inputs](Tape& t, int id) {
        const Matrix& g = t.node(id).grad;
        Eigen::Index at = 0;
        for (const Var& p : inputs) {
            const auto c = t.value(p).cols();
            t.accumulate(p.id, g.middleCols(at, c));
            at += c;
        }
    });
}

Var Tape::concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw std::invalid_argument("autograd::concat_rows: no inputs");
    const auto cols = value(parts[0]).cols();
    Eigen::Index rows = 0;
    bool ng = false;
    for (const Var& p : parts) {
        if (value(p).cols() != cols) throw std::invalid_argument("autograd::concat_rows: column mismatch");
        rows += value(p).rows();
        ng = ng || node(p.id).needs_grad;
    }
    Matrix out(rows, cols);
    Eigen::Index at = 0;
    for (const Var& p : parts) {
        out.middleRows(at, value(p).rows()) = value(p);
        at += value(p).rows();
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return push(std::move(out), ng, [inputs](Tape& t, int id) {
        const Matrix& g = t.node(id).grad;
        Eigen::Index at = 0;
        for (const Var& p : inputs) {
            const auto r = t.value(p).rows();
            t.accumulate(p.id, g.middleRows(at, r));
            at += r;
        }
    });
}

Var Tape::slice_cols(Var a, int start, int count) {
    const Matrix& x = value(a);
    if (start < 0 || count < 0 || start + count > x.cols()) throw std::invalid_argument("autograd::slice_cols: out of range");
    const auto rows = x.rows();
    const auto cols = x.cols();
    return push(x.middleCols(start, count), node(a.id).needs_grad, [a, start, count, rows, cols](Tape& t, int id) {
        Matrix g = Matrix::Zero(rows, cols);
        g.middleCols(start, count) = t.node(id).grad;
        t.accumulate(a.id, g);
    });
}

Var Tape::flatten(Var a) {
    const Matrix& x = value(a);
    const auto rows = x.rows();
    const auto cols = x.cols();
    Matrix out(1, rows * cols);
    for (Eigen::Index r = 0; r < rows; ++r) out.block(0, r * cols, 1, cols) = x.row(r);
    return push(std::move(out), node(a.id).needs_grad, [a, rows, cols](Tape& t, int id) {
        const Matrix& g = t.node(id).grad;
        Matrix d(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) d.row(r) = g.block(0, r * cols, 1, cols);
        t.accumulate(a.id, d);
    });
}

Var Tape::im2col(Var a, int kernel, int stride, int padding) {
    const Matrix& x = value(a);
    const auto len = static_cast<int>(x.rows());
    const auto dim = static_cast<int>(x.cols());
    if (kernel < 1 || stride < 1 || padding < 0) throw std::invalid_argument("autograd::im2col: bad geometry");
    const int out_len = (len + 2 * padding - kernel) / stride + 1;
    if (out_len < 1) throw std::invalid_argument("autograd::im2col: sequence shorter than kernel");
    Matrix out = Matrix::Zero(out_len, kernel * dim);
    for (int i = 0; i < out_len; ++i) {
        for (int j = 0; j < kernel; ++j) {
            const int src = i * stride - padding + j;
            if (src >= 0 && src < len) out.block(i, j * dim, 1, dim) = x.row(src);
        }
    }
    return push(std::move(out), node(a.id).needs_grad, [a, kernel, stride, padding, len, dim, out_len](Tape& t, int id) {
        const Matrix& g = t.node(id).grad;
        Matrix d = Matrix::Zero(len, dim);
        for (int i = 0; i < out_len; ++i) {
            for (int j = 0; j < kernel; ++j) {
                const int src = i * stride - padding + j;
                if (src >= 0 && src < len) d.row(src) += g.block(i, j * dim, 1, dim);
            }
        }
        t.accumulate(a.id, d);
    });
}

Var Tape::cosine(Var a, Var b) {
    const Matrix& x = value(a);
    const Matrix& y = value(b);
    if (x.rows() != 1 || y.rows() != 1 || x.cols() != y.cols()) throw std::invalid_argument("autograd::cosine: expects equal row vectors");
    const double nx = x.norm();
    const double ny = y.norm();
    const double c = (nx > 0 && ny > 0) ? x.row(0).dot(y.row(0)) / (nx * ny) : 0.0;
    Matrix out(1, 1);
    out(0, 0) = c;
    const bool ng = node(a.id).needs_grad || node(b.id).needs_grad;
    return push(std::move(out), ng, [a, b, nx, ny, c](Tape& t, int id) {
        if (!(nx > 0 && ny > 0)) return;
        const double g = t.node(id).grad(0, 0);
        const Matrix& x = t.value(a);
        const Matrix& y = t.value(b);
        t.accumulate(a.id, g * (y / (nx * ny) - c * x / (nx * nx)));
        t.accumulate(b.id, g * (x / (nx * ny) - c * y / (ny * ny)));
    });
}

Var Tape::mask(Var a, const Matrix& m) {
    if (m.rows() != value(a).rows() || m.cols() != value(a).cols()) throw std::invalid_argument("autograd::mask: shape mismatch");
    return push(value(a).cwiseProduct(m), node(a.id).needs_grad,
                [a, m](Tape& t, int id) { t.accumulate(a.id, t.node(id).grad.cwiseProduct(m)); });
}

void Tape::backward(std::span<const std::pair<Var, Matrix>> seeds) {
    for (const auto& [v, g] : seeds) {
        const Matrix& x = value(v);
        if (g.rows() != x.rows() || g.cols() != x.cols()) throw std::invalid_argument("autograd::backward: seed shape mismatch");
        accumulate(v.id, g);
    }
    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
        Node& n = node(id);
        if (!n.needs_grad || n.grad.size() == 0 || !n.backward_fn) continue;
        n.backward_fn(*this, id);
    }
}

void Tape::backward(Var scalar_output) {
    std::pair<Var, Matrix> seed{scalar_output, Matrix::Ones(1, 1)};
    backward(std::span<const std::pair<Var, Matrix>>(&seed, 1));
}

}  // namespace lscl::autograd
