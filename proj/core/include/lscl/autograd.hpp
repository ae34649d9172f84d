#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace lscl::autograd {

using Matrix = Eigen::MatrixXd;

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    const Matrix& value() const;
    double scalar() const { return value()(0, 0); }
};

/// Reverse-mode differentiation over dense matrices. Nodes are recorded in
/// evaluation order; backward() walks them in reverse.
class Tape {
public:
    /// Input that never receives a gradient.
    Var constant(Matrix value);
    /// Trainable input; backward() accumulates into `*grad_sink` (same shape).
    Var parameter(const Matrix& value, Matrix* grad_sink);

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    /// a (n x m) + row vector b (1 x m) broadcast over rows.
    Var add_row(Var a, Var b);
    Var scale(Var a, double s);
    Var transpose(Var a);
    Var gelu(Var a);
    Var sigmoid(Var a);
    Var softmax_rows(Var a);
    /// Normalizes each row to zero mean and unit variance.
    Var mean_rows(Var a);
    Var concat_cols(std::span<const Var> parts);
    Var concat_rows(std::span<const Var> parts);
    Var slice_cols(Var a, int start, int count);
    /// Flattens row-major into a single row.
    Var flatten(Var a);
    /// Unfolds a (L x D) sequence into (L_out x k*D) windows for 1-D convolution.
    Var im2col(Var a, int kernel, int stride, int padding);
    /// Cosine similarity of two row vectors, as 1 x 1.
    Var cosine(Var a, Var b);
    /// Elementwise product with a fixed mask.
    Var mask(Var a, const Matrix& mask);

    /// Seeds d(objective)/d(node) for each listed node and back-propagates.
    void backward(std::span<const std::pair<Var, Matrix>> seeds);
    void backward(Var scalar_output);

    const Matrix& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
    const Matrix& grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].grad; }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void(Tape&, int)> backward_fn;
        Matrix* grad_sink = nullptr;
        bool needs_grad = false;
    };

    Var push(Matrix value, bool needs_grad, std::function<void(Tape&, int)> fn);
    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
    void accumulate(int id, const Matrix& g);

    std::vector<Node> nodes_;
};

double gelu(double x);
double gelu_derivative(double x);

}  // namespace lscl::autograd
