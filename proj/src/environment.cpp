#include "wayfarer/environment.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace wayfarer {

namespace {

constexpr std::array<std::string_view, 14> kOpNames = {
    "click_at", "click_element", "hover_at", "focus_element", "key_press", "type_text", "set_value",
    "scroll",   "navigate",      "go_back",  "go_forward",    "new_tab",   "close_tab", "wait",
};

const std::set<std::string, std::less<>> kMatchOps = {"click", "hover", "key", "type", "set_value", "scroll", "navigate"};

std::optional<std::string> opt_string(const Json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<std::string>();
}

std::vector<ElementRecord> parse_elements(const Json& list) {
    std::vector<ElementRecord> out;
    for (const auto& e : list) out.push_back(element_from_json(e));
    return out;
}

Rect parse_rect(const Json& b) {
    if (!b.is_array() || b.size() != 4) throw std::invalid_argument("bbox must be [x0,y0,x1,y1]");
    return Rect{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
}

void check_element(const ElementRecord& e, const std::string& where) {
    if (e.key.empty()) throw PackInvalid(where + ": element without key");
    if (!e.bbox.within_viewport()) throw PackInvalid(where + ": element '" + e.key + "' bbox outside [0,1000]");
    if ((e.role == ElementRole::select) != !e.options.empty())
        throw PackInvalid(where + ": element '" + e.key + "' must have options iff it is a select");
    if (e.role == ElementRole::select && e.value &&
        std::find(e.options.begin(), e.options.end(), *e.value) == e.options.end())
        throw PackInvalid(where + ": select '" + e.key + "' value is not one of its options");
}

std::string transition_name(const Json& t, std::size_t i) {
    std::string name = "transition #" + std::to_string(i + 1);
    if (t.contains("id")) name += " '" + t["id"].get<std::string>() + "'";
    return name;
}

}  // namespace

std::string_view to_string(EnvOpKind kind) { return kOpNames[static_cast<std::size_t>(kind)]; }

std::optional<EnvOpKind> env_op_kind_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kOpNames.size(); ++i) {
        if (kOpNames[i] == name) return static_cast<EnvOpKind>(i);
    }
    return std::nullopt;
}

Json to_json(const EnvOp& op) {
    Json j{{"op", std::string(to_string(op.kind))}};
    if (op.point) j["point"] = to_json(*op.point);
    if (!op.element.empty()) j["element"] = op.element;
    if (!op.text.empty()) j["text"] = op.text;
    if (op.kind == EnvOpKind::wait) j["seconds"] = op.seconds;
    return j;
}

EnvOp env_op_from_json(const Json& j) {
    EnvOp op;
    auto kind = env_op_kind_from_string(j.at("op").get<std::string>());
    if (!kind) throw std::invalid_argument("unknown environment op '" + j.at("op").get<std::string>() + "'");
    op.kind = *kind;
    if (j.contains("point")) op.point = Point{j["point"][0].get<int>(), j["point"][1].get<int>()};
    op.element = j.value("element", std::string{});
    op.text = j.value("text", std::string{});
    op.seconds = j.value("seconds", 0.0);
    return op;
}

std::optional<ExecError> Environment::apply(const EnvOp& op) {
    log_.push_back(op);
    return execute(op);
}

// ---- site packs ----

SitePack SitePack::from_json(const Json& j, const std::filesystem::path& base_dir) {
    SitePack pack;
    try {
        pack.site_id = j.at("site_id").get<std::string>();
        if (j.contains("viewport")) {
            pack.viewport_width = j["viewport"].at(0).get<int>();
            pack.viewport_height = j["viewport"].at(1).get<int>();
        }
        pack.raster = j.value("raster", true);
        if (j.contains("task")) pack.task = task_from_json(j["task"]);
        auto resolve = [&](const std::string& p) {
            std::filesystem::path path = p;
            return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
        };
        if (auto m = opt_string(j, "models")) pack.models = resolve(*m);
        if (auto c = opt_string(j, "corpus")) pack.corpus = resolve(*c);

        for (const auto& pj : j.at("pages")) {
            PageDef page;
            page.id = pj.at("id").get<std::string>();
            page.url = pj.at("url").get<std::string>();
            page.initial = pj.value("initial", false);
            page.text = pj.value("text", std::string{});
            page.max_scroll = pj.value("max_scroll", 0);
            page.elements = parse_elements(pj.value("elements", Json::array()));
            for (const auto& mj : pj.value("modals", Json::array())) {
                ModalDef modal;
                modal.key = mj.at("key").get<std::string>();
                modal.text = mj.value("text", std::string{});
                if (mj.contains("bbox")) modal.bbox = parse_rect(mj["bbox"]);
                modal.elements = parse_elements(mj.value("elements", Json::array()));
                page.modals[modal.key] = std::move(modal);
            }
            if (pack.pages.count(page.id)) throw PackInvalid("duplicate page id '" + page.id + "'");
            pack.pages[page.id] = std::move(page);
        }

        const auto& transitions = j.value("transitions", Json::array());
        for (std::size_t i = 0; i < transitions.size(); ++i) {
            const auto& tj = transitions[i];
            Transition t;
            t.from = tj.at("from").get<std::string>();
            const auto& on = tj.at("on");
            t.match.op = on.at("op").get<std::string>();
            if (!kMatchOps.count(t.match.op))
                throw PackInvalid(transition_name(tj, i) + ": unknown op '" + t.match.op + "'");
            t.match.element = opt_string(on, "element");
            t.match.code = opt_string(on, "code");
            t.match.value = opt_string(on, "value");
            t.match.value_contains = opt_string(on, "value_contains");
            t.match.direction = opt_string(on, "direction");
            t.match.url = opt_string(on, "url");
            if (on.contains("modal")) t.match.modal = on["modal"].is_null() ? "" : on["modal"].get<std::string>();
            t.effect.to_page = opt_string(tj, "to");
            t.effect.open_modal = opt_string(tj, "open_modal");
            t.effect.close_modal = tj.value("close_modal", false);
            t.effect.set_text = opt_string(tj, "set_text");
            for (const auto& mj : tj.value("mutate", Json::array())) {
                ElementMutation m;
                m.key = mj.at("key").get<std::string>();
                m.label = opt_string(mj, "label");
                m.value = opt_string(mj, "value");
                if (mj.contains("enabled")) m.enabled = mj["enabled"].get<bool>();
                t.effect.mutations.push_back(std::move(m));
            }
            t.effect.add_elements = parse_elements(tj.value("add", Json::array()));
            t.effect.remove_elements = tj.value("remove", std::vector<std::string>{});
            t.delay_ms = tj.value("delay_ms", 0);
            pack.transitions.push_back(std::move(t));
        }
    } catch (const PackInvalid&) {
        throw;
    } catch (const std::exception& e) {
        throw PackInvalid(std::string("malformed site pack: ") + e.what());
    }
    pack.validate();
    return pack;
}

SitePack SitePack::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PackInvalid("cannot open site pack " + path.string());
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw PackInvalid("site pack is not valid JSON: " + path.string());
    return from_json(j, path.parent_path());
}

void SitePack::validate() const {
    if (site_id.empty()) throw PackInvalid("site_id is empty");
    if (viewport_width <= 0 || viewport_height <= 0) throw PackInvalid("viewport must be positive");
    std::vector<std::string> initial;
    for (const auto& [id, page] : pages) {
        if (page.initial) initial.push_back(id);
        if (!looks_like_url(page.url) && page.url != "about:blank")
            throw PackInvalid("page '" + id + "': url '" + page.url + "' is not a URL");
        std::set<std::string> keys;
        auto where = "page '" + id + "'";
        for (const auto& e : page.elements) {
            check_element(e, where);
            if (!keys.insert(e.key).second) throw PackInvalid(where + ": duplicate element key '" + e.key + "'");
        }
        for (const auto& [mkey, modal] : page.modals) {
            if (!modal.bbox.within_viewport()) throw PackInvalid(where + ": modal '" + mkey + "' bbox outside [0,1000]");
            if (!keys.insert(mkey).second) throw PackInvalid(where + ": duplicate element key '" + mkey + "'");
            for (const auto& e : modal.elements) {
                check_element(e, where + " modal '" + mkey + "'");
                if (!keys.insert(e.key).second) throw PackInvalid(where + ": duplicate element key '" + e.key + "'");
            }
        }
    }
    if (initial.empty()) throw PackInvalid("no page is marked initial");
    if (initial.size() > 1) throw PackInvalid("duplicate initial pages: '" + initial[0] + "' and '" + initial[1] + "'");

    // Keys each page can ever hold, including ones added by transitions.
    std::map<std::string, std::set<std::string>> known;
    for (const auto& [id, page] : pages) {
        for (const auto& e : page.elements) known[id].insert(e.key);
        for (const auto& [mkey, modal] : page.modals) {
            known[id].insert(mkey);
            for (const auto& e : modal.elements) known[id].insert(e.key);
        }
    }
    for (const auto& t : transitions) {
        auto target = t.effect.to_page ? *t.effect.to_page : t.from;
        for (const auto& e : t.effect.add_elements) {
            if (pages.count(target)) known[target].insert(e.key);
        }
    }
    for (std::size_t i = 0; i < transitions.size(); ++i) {
        const auto& t = transitions[i];
        auto name = "transition #" + std::to_string(i + 1) + " (from '" + t.from + "')";
        if (!pages.count(t.from)) throw PackInvalid(name + ": unknown source page '" + t.from + "'");
        if (t.effect.to_page && !pages.count(*t.effect.to_page))
            throw PackInvalid(name + ": unknown target page '" + *t.effect.to_page + "'");
        const auto& target = pages.at(t.effect.to_page ? *t.effect.to_page : t.from);
        if (t.effect.open_modal && !target.modals.count(*t.effect.open_modal))
            throw PackInvalid(name + ": unknown modal '" + *t.effect.open_modal + "' on page '" + target.id + "'");
        if (t.match.element && !known[t.from].count(*t.match.element))
            throw PackInvalid(name + ": matches unknown element '" + *t.match.element + "'");
        if (t.match.modal && !t.match.modal->empty() && !pages.at(t.from).modals.count(*t.match.modal))
            throw PackInvalid(name + ": requires unknown modal '" + *t.match.modal + "'");
        for (const auto& e : t.effect.add_elements) check_element(e, name);
        for (const auto& m : t.effect.mutations) {
            if (!known[target.id].count(m.key)) throw PackInvalid(name + ": mutates unknown element '" + m.key + "'");
        }
    }
}

const PageDef& SitePack::initial_page() const {
    for (const auto& [id, page] : pages) {
        if (page.initial) return page;
    }
    throw PackInvalid("no page is marked initial");
}

}  // namespace wayfarer
