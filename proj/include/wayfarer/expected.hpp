#pragma once

#include <stdexcept>
#include <utility>
#include <variant>

namespace wayfarer {

// Minimal value-or-error carrier. GCC 11 ships no std::expected.
template <typename T, typename E>
class Expected {
public:
    Expected(T value) : storage_(std::in_place_index<0>, std::move(value)) {}
    Expected(E error) : storage_(std::in_place_index<1>, std::move(error)) {}

    bool has_value() const { return storage_.index() == 0; }
    explicit operator bool() const { return has_value(); }

    const T& value() const& {
        if (!has_value()) throw std::logic_error("Expected::value() on error");
        return std::get<0>(storage_);
    }
    T&& value() && {
        if (!has_value()) throw std::logic_error("Expected::value() on error");
        return std::get<0>(std::move(storage_));
    }
    const E& error() const {
        if (has_value()) throw std::logic_error("Expected::error() on value");
        return std::get<1>(storage_);
    }

    const T* operator->() const { return &value(); }
    const T& operator*() const& { return value(); }

private:
    std::variant<T, E> storage_;
};

}  // namespace wayfarer
