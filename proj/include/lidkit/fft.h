// include/lidkit/fft.h

// Copyright 2026  LIDKit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef LIDKIT_FFT_H_
#define LIDKIT_FFT_H_

#include <complex>
#include <cstddef>
#include <vector>

namespace lidkit {

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_radix2(std::vector<std::complex<double>> &a);

// |X_k|^2 for k = 0..fft_size/2 of a real frame zero-padded to fft_size.
std::vector<double> power_spectrum(const std::vector<double> &frame,
                                   std::size_t fft_size);

// Smallest power of two >= n.
std::size_t next_pow2(std::size_t n);

}  // namespace lidkit

#endif  // LIDKIT_FFT_H_
