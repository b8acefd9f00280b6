// Copyright (c) 2026, The llmprop Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "llmprop/common.hpp"

namespace llmprop {

enum class ScalerMethod { z_score, min_max, log_norm, identity };

std::string_view to_string(ScalerMethod m);
ScalerMethod parse_scaler_method(std::string_view name);

// Label normalization fitted on training labels only. Forward maps:
//   z_score  (y - mu) / sigma          (population sigma)
//   min_max  (y - y_min) / (y_max - y_min)
//   log_norm log(1 + y)                natural log
template <typename Scalar>
class BasicLabelScaler {
public:
    using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

    BasicLabelScaler() = default;

    template <typename Derived>
    static BasicLabelScaler fit(const Eigen::DenseBase<Derived>& labels, ScalerMethod method) {
        BasicLabelScaler s;
        s.method_ = method;
        s.fitted_on_ = static_cast<std::size_t>(labels.size());
        const auto y = labels.derived().array().template cast<Scalar>();
        switch (method) {
        case ScalerMethod::z_score: {
            if (labels.size() < 2) throw NumericError("z_score fit needs at least 2 labels");
            s.mu_ = y.mean();
            s.sigma_ = std::sqrt((y - s.mu_).square().mean());
            if (!(s.sigma_ > Scalar(0))) throw NumericError("z_score fit on constant labels (sigma = 0)");
            break;
        }
        case ScalerMethod::min_max:
            if (labels.size() < 2) throw NumericError("min_max fit needs at least 2 labels");
            s.y_min_ = y.minCoeff();
            s.y_max_ = y.maxCoeff();
            if (!(s.y_max_ > s.y_min_)) throw NumericError("min_max fit on constant labels (y_max = y_min)");
            break;
        case ScalerMethod::log_norm:
            if (labels.size() > 0 && !(y.minCoeff() > Scalar(-1)))
                throw NumericError("log_norm fit needs all labels > -1");
            break;
        case ScalerMethod::identity: break;
        }
        return s;
    }

    ScalerMethod method() const { return method_; }
    Scalar mu() const { return mu_; }
    Scalar sigma() const { return sigma_; }
    Scalar y_min() const { return y_min_; }
    Scalar y_max() const { return y_max_; }
    std::size_t fitted_on() const { return fitted_on_; }

    Scalar transform(Scalar y) const {
        switch (method_) {
        case ScalerMethod::z_score: return (y - mu_) / sigma_;
        case ScalerMethod::min_max: return (y - y_min_) / (y_max_ - y_min_);
        case ScalerMethod::log_norm:
            if (!(y > Scalar(-1))) throw NumericError("log_norm transform of a label <= -1");
            return std::log1p(y);
        case ScalerMethod::identity: return y;
        }
        return y;
    }

    Scalar inverse(Scalar y_hat) const {
        switch (method_) {
        case ScalerMethod::z_score: return y_hat * sigma_ + mu_;
        case ScalerMethod::min_max: return y_hat * (y_max_ - y_min_) + y_min_;
        case ScalerMethod::log_norm: return std::expm1(y_hat);
        case ScalerMethod::identity: return y_hat;
        }
        return y_hat;
    }

    template <typename Derived>
    Array transform(const Eigen::DenseBase<Derived>& y) const {
        return y.derived().array().template cast<Scalar>().unaryExpr([this](Scalar v) { return transform(v); });
    }

    template <typename Derived>
    Array inverse(const Eigen::DenseBase<Derived>& y_hat) const {
        return y_hat.derived().array().template cast<Scalar>().unaryExpr([this](Scalar v) { return inverse(v); });
    }

    // key=value lines, full precision.
    std::string serialize() const {
        std::string out = "method=" + std::string(to_string(method_)) + "\n";
        out += "fitted_on=" + std::to_string(fitted_on_) + "\n";
        out += "mu=" + format_double(static_cast<double>(mu_)) + "\n";
        out += "sigma=" + format_double(static_cast<double>(sigma_)) + "\n";
        out += "y_min=" + format_double(static_cast<double>(y_min_)) + "\n";
        out += "y_max=" + format_double(static_cast<double>(y_max_)) + "\n";
        return out;
    }

    static BasicLabelScaler deserialize(std::string_view text) {
        std::map<std::string, std::string> kv;
        for (const auto& line : split(text, '\n')) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            kv[std::string(trim(std::string_view(line).substr(0, eq)))] =
                std::string(trim(std::string_view(line).substr(eq + 1)));
        }
        auto num = [&](const char* key) {
            const auto it = kv.find(key);
            if (it == kv.end()) throw ConfigError(std::string("scaler state missing '") + key + "'");
            const auto v = parse_double(it->second);
            if (!v) throw ConfigError(std::string("scaler state has bad '") + key + "'");
            return static_cast<Scalar>(*v);
        };
        if (!kv.count("method")) throw ConfigError("scaler state missing 'method'");
        BasicLabelScaler s;
        s.method_ = parse_scaler_method(kv["method"]);
        s.fitted_on_ = static_cast<std::size_t>(num("fitted_on"));
        s.mu_ = num("mu");
        s.sigma_ = num("sigma");
        s.y_min_ = num("y_min");
        s.y_max_ = num("y_max");
        return s;
    }

    friend bool operator==(const BasicLabelScaler&, const BasicLabelScaler&) = default;

private:
    ScalerMethod method_ = ScalerMethod::identity;
    Scalar mu_ = 0;
    Scalar sigma_ = 1;
    Scalar y_min_ = 0;
    Scalar y_max_ = 1;
    std::size_t fitted_on_ = 0;
};

using LabelScaler = BasicLabelScaler<double>;

inline std::string_view to_string(ScalerMethod m) {
    switch (m) {
    case ScalerMethod::z_score: return "z_score";
    case ScalerMethod::min_max: return "min_max";
    case ScalerMethod::log_norm: return "log_norm";
    case ScalerMethod::identity: return "identity";
    }
    return "?";
}

inline ScalerMethod parse_scaler_method(std::string_view name) {
    if (name == "z_score" || name == "z_norm") return ScalerMethod::z_score;
    if (name == "min_max") return ScalerMethod::min_max;
    if (name == "log_norm") return ScalerMethod::log_norm;
    if (name == "identity" || name == "none") return ScalerMethod::identity;
    throw ConfigError("unknown scaler '" + std::string(name) + "'");
}

} // namespace llmprop
