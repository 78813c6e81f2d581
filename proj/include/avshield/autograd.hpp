#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "avshield/tensor.hpp"

namespace avshield::ag {

// Reverse-mode automatic differentiation at tensor-op granularity. Each
// forward op appends one node holding its output value and a backward
// closure; backward() walks the DAG in reverse topological order.
struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad; // allocated lazily, same shape as value
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    std::function<void(Node&)> backward_fn;

    void accumulate(const Tensor& g);
    Tensor& ensure_grad();
};

NodePtr constant(Tensor value);
NodePtr leaf(Tensor value); // requires_grad = true

// Runs backward from a scalar root (shape {1}); seeds d(root)/d(root) = 1.
void backward(const NodePtr& root);

// --- elementwise ---
NodePtr add(const NodePtr& a, const NodePtr& b);
NodePtr sub(const NodePtr& a, const NodePtr& b);
NodePtr mul(const NodePtr& a, const NodePtr& b);
NodePtr add_scalar(const NodePtr& a, double s);
NodePtr mul_scalar(const NodePtr& a, double s);
NodePtr tanh_op(const NodePtr& a);
NodePtr sqrt_op(const NodePtr& a);  // d/dx guarded at x = 0
NodePtr log_op(const NodePtr& a);

// --- linear algebra ---
NodePtr matmul(const NodePtr& a, const NodePtr& b);    // (M,K)x(K,N)
NodePtr matmul_nt(const NodePtr& a, const NodePtr& b); // (M,K)x(N,K)^T -> (M,N)
NodePtr linear(const NodePtr& x, const NodePtr& w, const NodePtr& b); // x(N,I) w(I,O) b(O)

// --- shape ---
NodePtr reshape(const NodePtr& a, std::vector<int> shape);
NodePtr concat_channels(const NodePtr& a, const NodePtr& b); // (Ca,H,W)+(Cb,H,W)
NodePtr gather_rows(const NodePtr& a, std::vector<int> rows);
// Split a 1-D signal into F consecutive frames of length L, zero-padding the tail.
NodePtr frame_signal(const NodePtr& a, int frame_len, int n_frames);

// --- spatial ---
NodePtr conv3x3(const NodePtr& x, const NodePtr& w, const NodePtr& b); // x(Ci,H,W) w(Co,Ci,3,3) b(Co)
NodePtr avg_pool2(const NodePtr& x);
NodePtr upsample_nearest2(const NodePtr& x);
NodePtr add_channel_bias(const NodePtr& x, const NodePtr& bias); // (C,H,W)+(C)

// --- reductions / broadcasts over matrices (R,C) ---
NodePtr softmax_rows(const NodePtr& x);
NodePtr mean_over_rows(const NodePtr& x); // (R,C) -> (C)
NodePtr mean_over_cols(const NodePtr& x); // (R,C) -> (R)
NodePtr sub_row_broadcast(const NodePtr& x, const NodePtr& row); // (R,C)-(C)
NodePtr add_row_broadcast(const NodePtr& x, const NodePtr& row);
NodePtr sum_all(const NodePtr& x);  // -> scalar {1}
NodePtr mean_all(const NodePtr& x); // -> scalar {1}

} // namespace avshield::ag
