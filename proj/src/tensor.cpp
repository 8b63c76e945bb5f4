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

#include "isp/tensor.hpp"

#include <atomic>
#include <sstream>

namespace isp::ad {

namespace {

std::atomic<std::uint64_t> next_tape_id{1};

} // namespace

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) {
            throw ShapeError("negative extent in shape " + to_string(shape));
        }
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "," : "") << shape[i];
    }
    os << ']';
    return os.str();
}

// Tensor ----------------------------------------------------------------------

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data, bool requires_grad)
    : s_(std::make_shared<detail::Storage<T>>()) {
    if (data.size() != ad::numel(shape)) {
        throw ShapeError("data length " + std::to_string(data.size()) + " does not match shape " +
                         to_string(shape));
    }
    s_->shape = std::move(shape);
    s_->data = std::move(data);
    s_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
    std::vector<T> data(ad::numel(shape), value);
    return Tensor(std::move(shape), std::move(data), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
    return Tensor(Shape{1}, std::vector<T>{value}, requires_grad);
}

template <typename T>
int Tensor<T>::dim(int i) const {
    const int n = ndim();
    if (i < 0) i += n;
    if (i < 0 || i >= n) {
        throw ShapeError("dimension index " + std::to_string(i) + " out of range for shape " +
                         to_string(shape()));
    }
    return s_->shape[static_cast<std::size_t>(i)];
}

template <typename T>
T Tensor<T>::item() const {
    if (numel() != 1) {
        throw ShapeError("item() on tensor of shape " + to_string(shape()));
    }
    return s_->data[0];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool on) {
    if (!is_leaf()) {
        throw ValidationError("requires_grad can only be changed on leaf tensors");
    }
    s_->requires_grad = on;
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
    return Tensor(s_->shape, s_->data, false);
}

// Tape ------------------------------------------------------------------------

template <typename T>
Tape<T>::Tape(bool recording) : recording_(recording), id_(next_tape_id.fetch_add(1)) {}

template <typename T>
bool Tape<T>::tracks(std::initializer_list<const Tensor<T>*> inputs) const {
    if (!recording_) return false;
    for (const Tensor<T>* t : inputs) {
        if (t && t->defined() && t->requires_grad()) return true;
    }
    return false;
}

template <typename T>
Tensor<T> Tape<T>::emit(Shape shape, std::vector<T> data, std::initializer_list<const Tensor<T>*> inputs,
                        BackwardFn fn) {
    Tensor<T> out(std::move(shape), std::move(data), false);
    if (!tracks(inputs)) return out;
    if (consumed_) {
        throw ValidationError("tape already ran backward; reset() before recording new operations");
    }

    Node node;
    for (const Tensor<T>* t : inputs) {
        if (!t || !t->defined()) continue;
        if (!t->is_leaf() && t->requires_grad() && t->tape_id() != id_) {
            throw ValidationError("operation input was recorded on a different or reset tape");
        }
        node.inputs.push_back(t->storage_ptr());
    }
    out.s_->requires_grad = true;
    out.s_->tape_id = id_;
    node.output = out.s_;
    node.fn = std::move(fn);
    nodes_.push_back(std::move(node));
    return out;
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
    if (!loss.defined() || loss.numel() != 1) {
        throw ShapeError("backward() needs a scalar loss, got shape " +
                         (loss.defined() ? to_string(loss.shape()) : std::string("<undefined>")));
    }
    if (consumed_) {
        throw ValidationError("backward() already ran on this tape; reset() before another pass");
    }
    if (loss.is_leaf() || loss.tape_id() != id_ || !loss.requires_grad()) {
        throw ValidationError("loss is detached from this tape");
    }

    for (Node& n : nodes_) {
        for (auto& in : n.inputs) {
            if (in->requires_grad) in->grad.assign(in->data.size(), T(0));
        }
        n.output->grad.assign(n.output->data.size(), T(0));
    }
    loss.storage()->grad[0] = T(1);

    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        it->fn(*it->output);
    }
    consumed_ = true;
}

template <typename T>
void Tape<T>::reset() {
    nodes_.clear();
    consumed_ = false;
    id_ = next_tape_id.fetch_add(1);
}

// ParamSet --------------------------------------------------------------------

template <typename T>
void ParamSet<T>::add(std::string name, Tensor<T> tensor) {
    if (index_.count(name)) {
        throw ValidationError("duplicate parameter name '" + name + "'");
    }
    index_.emplace(name, entries_.size());
    entries_.push_back({std::move(name), std::move(tensor)});
}

template <typename T>
bool ParamSet<T>::contains(std::string_view name) const {
    return index_.count(std::string(name)) != 0;
}

template <typename T>
const Tensor<T>& ParamSet<T>::at(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) {
        throw ValidationError("unknown parameter '" + std::string(name) + "'");
    }
    return entries_[it->second].tensor;
}

template <typename T>
Tensor<T>& ParamSet<T>::at(std::string_view name) {
    return const_cast<Tensor<T>&>(std::as_const(*this).at(name));
}

template <typename T>
std::size_t ParamSet<T>::total_elements() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.tensor.numel();
    return n;
}

template <typename T>
void ParamSet<T>::clear_grads() {
    for (auto& e : entries_) e.tensor.clear_grad();
}

template <typename T>
void ParamSet<T>::set_requires_grad(bool on) {
    for (auto& e : entries_) e.tensor.set_requires_grad(on);
}

template <typename T>
ParamSet<T> ParamSet<T>::clone() const {
    ParamSet out;
    for (const auto& e : entries_) {
        Tensor<T> copy = e.tensor.detach();
        copy.set_requires_grad(e.tensor.requires_grad());
        out.add(e.name, std::move(copy));
    }
    return out;
}

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& t, bool requires_grad) {
    auto src = t.data();
    std::vector<To> data(src.begin(), src.end());
    return Tensor<To>(t.shape(), std::move(data), requires_grad);
}

template <typename To, typename From>
ParamSet<To> cast(const ParamSet<From>& params, bool requires_grad) {
    ParamSet<To> out;
    for (const auto& e : params) out.add(e.name, cast<To>(e.tensor, requires_grad));
    return out;
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;
template class ParamSet<float>;
template class ParamSet<double>;
// Extended precision serves as the reference in finite-difference checks.
template class Tensor<long double>;
template class Tape<long double>;
template class ParamSet<long double>;

template Tensor<double> cast<double, float>(const Tensor<float>&, bool);
template Tensor<float> cast<float, double>(const Tensor<double>&, bool);
template ParamSet<double> cast<double, float>(const ParamSet<float>&, bool);
template ParamSet<float> cast<float, double>(const ParamSet<double>&, bool);
template Tensor<long double> cast<long double, double>(const Tensor<double>&, bool);
template ParamSet<long double> cast<long double, double>(const ParamSet<double>&, bool);

} // namespace isp::ad
