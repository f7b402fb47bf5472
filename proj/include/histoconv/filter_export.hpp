#pragma once

#include <string>
#include <vector>

#include "histoconv/image.hpp"
#include "histoconv/model.hpp"

namespace histoconv {

// Render one convolution layer's filter bank as an image grid.
//
// Filters are laid out row-major, eight per row, separated by a 2px border
// (also drawn around the outside).  Each filter is min-max normalized to
// [0,255] over all of its weights; a constant filter maps to mid gray.
// First-layer filters with three input channels become RGB tiles (each
// weight cell drawn 16x16); deeper layers show one grayscale patch per
// input channel (cells drawn 6x6), packed into a near-square mosaic with
// 1px internal gaps.
ImageU8 render_filter_grid(const Tensor<float>& weights);

// Write filters_conv1.png, filters_conv2.png, ... into out_dir, one per
// convolution layer in network order.  Returns the written paths.  Throws
// Error if the model has no convolution layers.
std::vector<std::string> export_filters(const Model<float>& model, const std::string& out_dir);

}  // namespace histoconv
