// SPDX-License-Identifier: Apache-2.0
#include "clqa/tensor_bundle.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "clqa/jsonl.hpp"
#include "json.hpp"

namespace clqa {
namespace {

void check_name(const std::string& name) {
  if (name.empty()) throw std::invalid_argument("tensor name must be non-empty");
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    if (!ok) {
      throw std::invalid_argument("tensor name contains invalid character: " +
                                  name);
    }
  }
}

}  // namespace

void TensorBundle::add(TensorArray array) {
  check_name(array.name);
  if (array.elem_count() != array.data.size()) {
    std::ostringstream msg;
    msg << "tensor " << array.name << ": manifest declares "
        << array.elem_count() << " elements but array holds "
        << array.data.size();
    throw std::invalid_argument(msg.str());
  }
  for (float v : array.data) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("tensor " + array.name +
                                  " contains non-finite values");
    }
  }
  auto [it, inserted] = by_name_.emplace(array.name, arrays_.size());
  if (!inserted) {
    throw std::invalid_argument("duplicate tensor name: " + array.name);
  }
  arrays_.push_back(std::move(array));
}

const TensorArray& TensorBundle::at(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) {
    throw std::out_of_range("tensor bundle has no array named: " + name);
  }
  return arrays_[it->second];
}

TensorBundle load_tensor_bundle(const std::filesystem::path& dir) {
  const std::filesystem::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) {
    throw std::runtime_error("cannot open manifest: " + manifest_path.string());
  }
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed manifest " + manifest_path.string() +
                             ": " + e.what());
  }
  if (!manifest.is_array()) {
    throw std::runtime_error("manifest must be a JSON array: " +
                             manifest_path.string());
  }
  TensorBundle bundle;
  for (const nlohmann::json& entry : manifest) {
    TensorArray array;
    array.name = entry.at("name").get<std::string>();
    check_name(array.name);
    array.shape = entry.at("shape").get<std::vector<std::size_t>>();
    array.role = entry.value("role", std::string{});
    const std::string dtype = entry.value("dtype", std::string{"f32"});
    if (dtype != "f32") {
      throw std::runtime_error("tensor " + array.name +
                               ": unsupported dtype " + dtype);
    }
    const std::filesystem::path data_path = dir / (array.name + ".f32");
    std::ifstream data(data_path, std::ios::binary);
    if (!data) {
      throw std::runtime_error("cannot open tensor data: " +
                               data_path.string());
    }
    data.seekg(0, std::ios::end);
    const std::streamoff bytes = data.tellg();
    data.seekg(0, std::ios::beg);
    if (bytes < 0 || bytes % 4 != 0) {
      throw std::runtime_error("tensor " + array.name +
                               ": data size is not a multiple of 4 bytes");
    }
    const std::size_t count = static_cast<std::size_t>(bytes) / 4;
    if (count != array.elem_count()) {
      std::ostringstream msg;
      msg << "tensor " << array.name << ": manifest shape needs "
          << array.elem_count() << " floats but file holds " << count;
      throw std::runtime_error(msg.str());
    }
    array.data.resize(count);
    data.read(reinterpret_cast<char*>(array.data.data()), bytes);
    if (!data) {
      throw std::runtime_error("read failed: " + data_path.string());
    }
    try {
      bundle.add(std::move(array));
    } catch (const std::exception& e) {
      throw std::runtime_error(std::string(e.what()) + " (" +
                               manifest_path.string() + ")");
    }
  }
  return bundle;
}

void save_tensor_bundle(const TensorBundle& bundle,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest = nlohmann::json::array();
  for (const TensorArray& array : bundle.arrays()) {
    manifest.push_back({{"name", array.name},
                        {"shape", array.shape},
                        {"role", array.role},
                        {"dtype", "f32"}});
    std::string bytes(reinterpret_cast<const char*>(array.data.data()),
                      array.data.size() * 4);
    write_file_atomic(dir / (array.name + ".f32"), bytes);
  }
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

MultiVectorEmbeddingF embedding_from_array(const TensorArray& array) {
  if (array.shape.size() != 3) {
    throw std::invalid_argument("tensor " + array.name +
                                ": expected shape [heads, tokens, dim]");
  }
  const auto heads = static_cast<Eigen::Index>(array.shape[0]);
  const auto tokens = static_cast<Eigen::Index>(array.shape[1]);
  const auto dim = static_cast<Eigen::Index>(array.shape[2]);
  MultiVectorEmbeddingF e;
  e.heads.reserve(static_cast<std::size_t>(heads));
  for (Eigen::Index h = 0; h < heads; ++h) {
    e.heads.emplace_back(Eigen::Map<const RowMatrixF>(
        array.data.data() + h * tokens * dim, tokens, dim));
  }
  e.pad_mask = BoolArray::Constant(tokens, true);
  e.validate();
  return e;
}

Eigen::VectorXf dense_from_array(const TensorArray& array) {
  const bool flat = array.shape.size() == 1;
  const bool row = array.shape.size() == 2 && array.shape[0] == 1;
  if (!flat && !row) {
    throw std::invalid_argument("tensor " + array.name +
                                ": expected shape [dim] or [1, dim]");
  }
  return array.as_vector();
}

}  // namespace clqa
