#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <set>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tapsynth/catalog.hpp"
#include "tapsynth/embedding.hpp"

namespace tstest {

using namespace tapsynth;

inline std::string source_path(const std::string& rel) { return std::string(TAPSYNTH_SOURCE_DIR) + "/" + rel; }

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(gen_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }

    template <typename T>
    const T& pick(const std::vector<T>& v) { return v[static_cast<std::size_t>(uniform(0, static_cast<int>(v.size()) - 1))]; }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

inline EmbeddingVector random_unit(Rng& rng, std::size_t dim) {
    EmbeddingVector v;
    v.values.resize(dim);
    for (;;) {
        for (auto& x : v.values) x = static_cast<float>(rng.normal());
        if (l2_norm(v) > 1e-3) break;
    }
    normalize(v);
    return v;
}

inline IngredientSpec ingredient(std::string slug, DataType type = {}) {
    IngredientSpec i;
    i.slug = std::move(slug);
    i.data_type = type;
    return i;
}

inline FieldSpec field(std::string slug, bool required = true, DataType type = {}) {
    FieldSpec f;
    f.label = slug;
    f.slug = std::move(slug);
    f.required = required;
    f.data_type = type;
    return f;
}

inline FunctionEntry trigger(std::string id, std::vector<IngredientSpec> ingredients = {},
                             std::vector<FieldSpec> fields = {}, std::string category = "General") {
    FunctionEntry e;
    e.id = id;
    e.kind = FunctionKind::Trigger;
    e.function_name = id;
    e.channel = "Channel " + id.substr(0, id.find('.'));
    e.category = std::move(category);
    e.description = "Fires for " + id;
    e.ingredients = std::move(ingredients);
    e.fields = std::move(fields);
    return e;
}

inline FunctionEntry action(std::string id, std::vector<FieldSpec> fields = {}, std::string category = "General") {
    FunctionEntry e;
    e.id = id;
    e.kind = FunctionKind::Action;
    e.function_name = id;
    e.channel = "Channel " + id.substr(0, id.find('.'));
    e.category = std::move(category);
    e.description = "Performs " + id;
    e.fields = std::move(fields);
    return e;
}

inline Catalog make_catalog(std::vector<FunctionEntry> triggers, std::vector<FunctionEntry> actions) {
    std::set<std::string> cats;
    for (const auto& e : triggers) cats.insert(e.category);
    for (const auto& e : actions) cats.insert(e.category);
    return Catalog(std::move(triggers), std::move(actions), std::move(cats));
}

inline const std::vector<std::string>& vocabulary() {
    static const std::vector<std::string> words = {
        "title", "body", "message", "content", "text", "name", "label", "url", "link", "address",
        "time", "date", "timestamp", "image", "photo", "picture", "temperature", "humidity", "price",
        "stock", "percentage", "change", "color", "light", "author", "keywords", "tags", "notebook",
        "channel", "user", "file", "folder", "path", "city", "level", "count", "steps", "weight"};
    return words;
}

inline std::string random_slug(Rng& rng, int max_tokens = 3) {
    const int n = rng.uniform(1, max_tokens);
    std::string s;
    for (int i = 0; i < n; ++i) {
        if (i) s += "_";
        s += rng.pick(vocabulary());
    }
    return s;
}

inline FunctionEntry random_trigger(Rng& rng, const std::string& id, int max_ingredients = 6) {
    std::vector<IngredientSpec> ings;
    std::set<std::string> seen;
    const int n = rng.uniform(0, max_ingredients);
    for (int i = 0; i < n; ++i) {
        auto slug = random_slug(rng);
        if (seen.insert(slug).second) ings.push_back(ingredient(slug));
    }
    return trigger(id, std::move(ings), {}, "Cat" + std::to_string(rng.uniform(0, 3)));
}

inline FunctionEntry random_action(Rng& rng, const std::string& id, int max_fields = 5) {
    std::vector<FieldSpec> fields;
    std::set<std::string> seen;
    const int n = rng.uniform(0, max_fields);
    for (int i = 0; i < n; ++i) {
        auto slug = random_slug(rng);
        if (seen.insert(slug).second) fields.push_back(field(slug, rng.coin(0.6)));
    }
    return action(id, std::move(fields), "Cat" + std::to_string(rng.uniform(0, 3)));
}

inline std::string pad_id(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%03d", prefix, i);
    return buf;
}

}  // namespace tstest
