// Copyright (c) 2026 The twostage-isp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "isp/error.hpp"

// Dense tensors with a reverse-mode differentiation tape.
//
// A Tensor is a shared handle to a storage block. Leaves are created directly
// (parameters, inputs); every other tensor is produced by exactly one
// operation recorded on a Tape. Layout for 4-D values is [batch, channel,
// height, width], row-major.
namespace isp::ad {

using Shape = std::vector<int>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

template <typename T>
class Tape;

namespace detail {

template <typename T>
struct Storage {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad; // empty until a backward pass touches this storage
    bool requires_grad = false;
    std::uint64_t tape_id = 0; // 0 for leaves
};

} // namespace detail

template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;
    Tensor(Shape shape, std::vector<T> data, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, T value, bool requires_grad = false);
    static Tensor scalar(T value, bool requires_grad = false);

    bool defined() const noexcept { return static_cast<bool>(s_); }
    const Shape& shape() const { return s_->shape; }
    int ndim() const { return static_cast<int>(s_->shape.size()); }
    int dim(int i) const;
    std::size_t numel() const { return s_->data.size(); }

    std::span<T> data() { return s_->data; }
    std::span<const T> data() const { return s_->data; }
    T item() const;

    bool requires_grad() const noexcept { return s_ && s_->requires_grad; }
    void set_requires_grad(bool on);
    bool is_leaf() const noexcept { return s_->tape_id == 0; }
    std::uint64_t tape_id() const noexcept { return s_->tape_id; }

    bool has_grad() const noexcept { return s_ && !s_->grad.empty(); }
    std::span<const T> grad() const { return s_->grad; }
    void clear_grad() { s_->grad.clear(); }

    // Deep copy as an untracked leaf.
    Tensor detach() const;

    // Two handles to the same storage.
    bool same_storage(const Tensor& other) const noexcept { return s_ == other.s_; }

    detail::Storage<T>* storage() const noexcept { return s_.get(); }
    const std::shared_ptr<detail::Storage<T>>& storage_ptr() const noexcept { return s_; }

private:
    friend class Tape<T>;
    explicit Tensor(std::shared_ptr<detail::Storage<T>> s) : s_(std::move(s)) {}

    std::shared_ptr<detail::Storage<T>> s_;
};

// Records operations and replays them in reverse to compute gradients.
//
// A tape runs backward at most once; a second call throws until reset().
// backward() overwrites (never accumulates) the gradient of every tensor the
// tape touched, so leaf gradients always hold dLoss/dLeaf for the last pass.
template <typename T>
class Tape {
public:
    // Receives the produced tensor's storage (its grad is dLoss/dOutput).
    using BackwardFn = std::function<void(const detail::Storage<T>& out)>;

    explicit Tape(bool recording = true);
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const noexcept { return recording_; }
    std::uint64_t id() const noexcept { return id_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    bool consumed() const noexcept { return consumed_; }

    void backward(const Tensor<T>& loss);

    // Drops all recorded nodes; tensors produced before the reset become
    // detached and cannot be differentiated any more.
    void reset();

    // Creates the result of an operation. When any input tracks gradients and
    // the tape is recording, a node with `fn` is appended; otherwise the
    // result is an untracked leaf.
    Tensor<T> emit(Shape shape, std::vector<T> data, std::initializer_list<const Tensor<T>*> inputs,
                   BackwardFn fn);

    bool tracks(std::initializer_list<const Tensor<T>*> inputs) const;

private:
    struct Node {
        std::vector<std::shared_ptr<detail::Storage<T>>> inputs;
        std::shared_ptr<detail::Storage<T>> output;
        BackwardFn fn;
    };

    bool recording_;
    bool consumed_ = false;
    std::uint64_t id_;
    std::vector<Node> nodes_;
};

// Ordered collection of named tensors (network parameters, gradients).
template <typename T>
class ParamSet {
public:
    struct Entry {
        std::string name;
        Tensor<T> tensor;
    };

    void add(std::string name, Tensor<T> tensor);
    bool contains(std::string_view name) const;
    const Tensor<T>& at(std::string_view name) const;
    Tensor<T>& at(std::string_view name);

    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t total_elements() const;

    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    void clear_grads();
    void set_requires_grad(bool on);

    // Deep copy; the copy shares no storage with this set.
    ParamSet clone() const;

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Converts precision, producing independent leaves (used for 64-bit replay).
template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& t, bool requires_grad = false);

template <typename To, typename From>
ParamSet<To> cast(const ParamSet<From>& params, bool requires_grad = false);

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;
extern template class ParamSet<float>;
extern template class ParamSet<double>;
extern template class Tensor<long double>;
extern template class Tape<long double>;
extern template class ParamSet<long double>;

} // namespace isp::ad
