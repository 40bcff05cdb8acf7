#pragma once

#include "lcs/rng.hpp"
#include "lcs/tape.hpp"
#include "lcs/tensor.hpp"

namespace lcs {

// Layer primitives. All take NCHW tensors unless noted, record themselves on
// the tape when gradients are required, and are deterministic given (inputs,
// seed). Backward rules accumulate into the grads of inputs that require them.

// output spatial extent: floor((H + 2*padding - k) / stride) + 1
template <typename S>
VarT<S> conv2d(TapeT<S>& tape, const VarT<S>& input, const VarT<S>& weight, const VarT<S>& bias,
               int stride = 1, int padding = 0);

// training mode: batch statistics + running-stat update (momentum 0.1);
// eval mode: pure function of the running stats. eps = 1e-5.
template <typename S>
VarT<S> batchnorm2d(TapeT<S>& tape, const VarT<S>& input, const VarT<S>& gamma,
                    const VarT<S>& beta, TensorT<S>& running_mean, TensorT<S>& running_var,
                    bool training, S momentum = S(0.1), S eps = S(1e-5));

template <typename S>
VarT<S> relu(TapeT<S>& tape, const VarT<S>& input);

template <typename S>
VarT<S> sigmoid(TapeT<S>& tape, const VarT<S>& input);

// training mode: zeroes elements with probability `rate` and scales survivors
// by 1/(1-rate); eval mode or rate 0: identity.
template <typename S>
VarT<S> dropout(TapeT<S>& tape, const VarT<S>& input, double rate, bool training, CounterRng& rng);

// Gradient routes to the window argmax; ties go to the first element in
// row-major order.
template <typename S>
VarT<S> maxpool2d(TapeT<S>& tape, const VarT<S>& input, int k = 2, int stride = 2);

template <typename S>
VarT<S> avgpool2d(TapeT<S>& tape, const VarT<S>& input, int k, int stride);

// Nearest-neighbor doubling of H and W.
template <typename S>
VarT<S> upsample2x(TapeT<S>& tape, const VarT<S>& input);

template <typename S>
VarT<S> concat_channels(TapeT<S>& tape, const VarT<S>& a, const VarT<S>& b);

template <typename S>
VarT<S> add(TapeT<S>& tape, const VarT<S>& a, const VarT<S>& b);

// wa*a + wb*b elementwise; used to blend the two loss terms.
template <typename S>
VarT<S> weighted_sum(TapeT<S>& tape, const VarT<S>& a, const VarT<S>& b, S wa, S wb);

extern template Var conv2d<float>(Tape&, const Var&, const Var&, const Var&, int, int);
extern template VarT<double> conv2d<double>(TapeT<double>&, const VarT<double>&,
                                            const VarT<double>&, const VarT<double>&, int, int);

}  // namespace lcs
