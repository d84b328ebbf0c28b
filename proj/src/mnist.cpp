/* Copyright 2026 The rpusim Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "rpusim/mnist.hpp"

#include <fstream>

#include "rpusim/errors.hpp"

namespace rpusim {

namespace {

std::vector<std::uint8_t> read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw MissingDataError("cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

std::uint32_t be32(const std::vector<std::uint8_t> &b, std::size_t off,
                   const std::string &path) {
  if (off + 4 > b.size())
    throw DataError("'" + path + "': truncated header");
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
         (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

} // namespace

Volume MnistData::image(std::size_t i) const {
  Volume v = Volume::zeros(side, 1);
  const std::size_t n = std::size_t(side) * std::size_t(side);
  const std::uint8_t *src = pixels.data() + i * n;
  for (std::size_t p = 0; p < n; ++p)
    v.data[p] = double(src[p]) / 255.0;
  return v;
}

MnistData load_mnist(const std::string &images_path,
                     const std::string &labels_path) {
  const std::vector<std::uint8_t> ib = read_file(images_path);
  const std::vector<std::uint8_t> lb = read_file(labels_path);

  const std::uint32_t imagic = be32(ib, 0, images_path);
  if (imagic != 0x00000803u)
    throw DataError("'" + images_path + "': bad image magic " +
                    std::to_string(imagic) + ", expected 2051");
  const std::uint32_t icount = be32(ib, 4, images_path);
  const std::uint32_t rows = be32(ib, 8, images_path);
  const std::uint32_t cols = be32(ib, 12, images_path);
  if (rows == 0 || cols == 0 || rows != cols)
    throw DataError("'" + images_path + "': unsupported image geometry " +
                    std::to_string(rows) + "x" + std::to_string(cols));
  const std::size_t want = 16 + std::size_t(icount) * rows * cols;
  if (ib.size() != want)
    throw DataError("'" + images_path + "': has " +
                    std::to_string(ib.size()) + " bytes, expected " +
                    std::to_string(want));

  const std::uint32_t lmagic = be32(lb, 0, labels_path);
  if (lmagic != 0x00000801u)
    throw DataError("'" + labels_path + "': bad label magic " +
                    std::to_string(lmagic) + ", expected 2049");
  const std::uint32_t lcount = be32(lb, 4, labels_path);
  if (lb.size() != 8 + std::size_t(lcount))
    throw DataError("'" + labels_path + "': has " +
                    std::to_string(lb.size()) + " bytes, expected " +
                    std::to_string(8 + std::size_t(lcount)));
  if (icount != lcount)
    throw DataError("image/label count mismatch: " + std::to_string(icount) +
                    " images vs " + std::to_string(lcount) + " labels");

  MnistData d;
  d.count = int(icount);
  d.side = int(rows);
  d.pixels.assign(ib.begin() + 16, ib.end());
  d.labels.assign(lb.begin() + 8, lb.end());
  return d;
}

} // namespace rpusim
