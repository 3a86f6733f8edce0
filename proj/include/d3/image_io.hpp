/*
 * Copyright 2026 The D3 Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "d3/image.hpp"

namespace d3 {

/// 8-bit PNG (gray/RGB, alpha dropped) or binary PPM/PGM. Pixels map to
/// [0,1] by /255.
ImageTensor read_image(const std::filesystem::path& path);

/// Quantizes with round(v * 255) after clamping. Format follows the
/// extension: .png, .ppm or .pgm.
void write_image(const ImageTensor& img, const std::filesystem::path& path);

/// Sorted image files (png/ppm/pgm) directly inside dir.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

}  // namespace d3
