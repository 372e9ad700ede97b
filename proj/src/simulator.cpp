#include "wayfarer/environment.hpp"

#include <algorithm>
#include <cmath>

namespace wayfarer {

namespace {

constexpr int kScrollStep = 250;
const PageDef kBlankPage{"__blank__", "about:blank", false, "", {}, {}, 0};

Rgb role_color(ElementRole role) {
    switch (role) {
        case ElementRole::button: return {66, 133, 244};
        case ElementRole::link: return {52, 168, 83};
        case ElementRole::input: return {250, 250, 250};
        case ElementRole::select: return {251, 188, 5};
        case ElementRole::option: return {240, 220, 150};
        case ElementRole::image: return {180, 180, 200};
        case ElementRole::container: return {235, 235, 240};
        case ElementRole::iframe_boundary: return {225, 230, 245};
        case ElementRole::other: return {210, 210, 210};
    }
    return {200, 200, 200};
}

bool takes_focus(const ElementRecord& e) { return e.role == ElementRole::input || e.role == ElementRole::select; }

void pop_code_point(std::string& s) {
    while (!s.empty()) {
        unsigned char c = static_cast<unsigned char>(s.back());
        s.pop_back();
        if ((c & 0xC0) != 0x80) break;
    }
}

}  // namespace

SimulatedSite::SimulatedSite(SitePack pack) : pack_(std::move(pack)) {
    pack_.validate();
    tabs_.push_back(Tab{fresh(pack_.initial_page().id), {}, {}});
}

SimulatedSite::PageState SimulatedSite::fresh(const std::string& page_id) const {
    PageState s;
    s.page = page_id == kBlankPage.id ? kBlankPage : pack_.pages.at(page_id);
    return s;
}

std::vector<const ElementRecord*> SimulatedSite::live_elements() const {
    std::vector<const ElementRecord*> out;
    for (const auto& e : state().page.elements) out.push_back(&e);
    if (state().modal) {
        const auto& modal = state().page.modals.at(*state().modal);
        for (const auto& e : modal.elements) out.push_back(&e);
    }
    return out;
}

ElementRecord* SimulatedSite::find_mutable(const std::string& key) {
    for (auto& e : state().page.elements) {
        if (e.key == key) return &e;
    }
    for (auto& [mkey, modal] : state().page.modals) {
        for (auto& e : modal.elements) {
            if (e.key == key) return &e;
        }
    }
    return nullptr;
}

bool SimulatedSite::reachable(const std::string& key) const {
    auto live = live_elements();
    return std::any_of(live.begin(), live.end(), [&](const ElementRecord* e) { return e->key == key; });
}

const ElementRecord* SimulatedSite::hit_test(Point p) const {
    if (state().modal) {
        // The modal's backdrop swallows every click outside its own elements.
        const auto& modal = state().page.modals.at(*state().modal);
        for (auto it = modal.elements.rbegin(); it != modal.elements.rend(); ++it) {
            if (it->bbox.contains(p)) return &*it;
        }
        return nullptr;
    }
    const auto& elements = state().page.elements;
    for (auto it = elements.rbegin(); it != elements.rend(); ++it) {
        if (it->bbox.contains(p)) return &*it;
    }
    return nullptr;
}

PageSnapshot SimulatedSite::snapshot() {
    PageSnapshot s;
    const auto& st = state();
    s.url = st.page.url;
    s.visible_text = st.page.text;
    for (const auto* e : live_elements()) s.interactive_elements.push_back(*e);
    if (st.modal) {
        const auto& modal = st.page.modals.at(*st.modal);
        if (!modal.text.empty()) s.visible_text += "\n" + modal.text;
        ElementRecord container;
        container.key = modal.key;
        container.role = ElementRole::container;
        container.bbox = modal.bbox;
        s.interactive_elements.insert(s.interactive_elements.begin() + static_cast<long>(st.page.elements.size()), container);
        s.modal_open = true;
        s.modal_element = modal.key;
    }
    s.focused_element = st.focused;
    s.scroll_position = st.scroll;
    if (pack_.raster) s.screenshot = render();
    return s;
}

std::optional<std::string> SimulatedSite::read_value(const std::string& key) {
    for (const auto* e : live_elements()) {
        if (e->key == key) return e->value.value_or("");
    }
    return std::nullopt;
}

std::optional<ExecError> SimulatedSite::execute(const EnvOp& op) {
    auto& st = state();
    switch (op.kind) {
        case EnvOpKind::click_at:
        case EnvOpKind::click_element: {
            const ElementRecord* target = nullptr;
            if (op.kind == EnvOpKind::click_at) {
                if (!op.point) return ExecError{ErrorCode::EnvironmentError, "click_at without a point"};
                target = hit_test(*op.point);
            } else {
                if (!reachable(op.element)) return ExecError{ErrorCode::ElementNotFound, "no element '" + op.element + "'"};
                target = find_mutable(op.element);
            }
            if (!target || !target->enabled) return std::nullopt;
            std::string key = target->key;
            if (takes_focus(*target)) {
                st.focused = key;
                st.select_all = false;
            }
            fire_transitions("click", key, op);
            return std::nullopt;
        }
        case EnvOpKind::hover_at: {
            if (!op.point) return ExecError{ErrorCode::EnvironmentError, "hover_at without a point"};
            const auto* target = hit_test(*op.point);
            fire_transitions("hover", target ? std::optional<std::string>(target->key) : std::nullopt, op);
            return std::nullopt;
        }
        case EnvOpKind::focus_element: {
            if (!reachable(op.element)) return ExecError{ErrorCode::ElementNotFound, "no element '" + op.element + "'"};
            st.focused = op.element;
            st.select_all = false;
            return std::nullopt;
        }
        case EnvOpKind::key_press: {
            ElementRecord* field = st.focused ? find_mutable(*st.focused) : nullptr;
            bool editable = field && field->role == ElementRole::input && field->enabled;
            if (op.text == kSelectAllChord) {
                if (editable) st.select_all = true;
            } else if (op.text == "Backspace" && editable) {
                std::string value = field->value.value_or("");
                if (st.select_all) value.clear();
                else pop_code_point(value);
                field->value = value;
                st.select_all = false;
            }
            fire_transitions("key", st.focused, op);
            return std::nullopt;
        }
        case EnvOpKind::type_text: {
            ElementRecord* field = st.focused ? find_mutable(*st.focused) : nullptr;
            if (field && field->role == ElementRole::input && field->enabled) {
                field->value = (st.select_all ? std::string{} : field->value.value_or("")) + op.text;
                st.select_all = false;
            }
            fire_transitions("type", st.focused, op);
            return std::nullopt;
        }
        case EnvOpKind::set_value: {
            if (!reachable(op.element)) return ExecError{ErrorCode::ElementNotFound, "no element '" + op.element + "'"};
            ElementRecord* e = find_mutable(op.element);
            if (e->role == ElementRole::select &&
                std::find(e->options.begin(), e->options.end(), op.text) == e->options.end()) {
                return ExecError{ErrorCode::OptionNotFound, "'" + op.text + "' is not an option of '" + op.element + "'"};
            }
            if (!e->enabled) return std::nullopt;
            e->value = op.text;
            fire_transitions("set_value", op.element, op);
            return std::nullopt;
        }
        case EnvOpKind::scroll: {
            int y = st.scroll.y;
            if (op.text == "down") y += kScrollStep;
            else if (op.text == "up") y -= kScrollStep;
            else if (op.text == "top") y = 0;
            else if (op.text == "bottom") y = st.page.max_scroll;
            else return ExecError{ErrorCode::EnvironmentError, "unknown scroll direction '" + op.text + "'"};
            st.scroll.y = std::clamp(y, 0, st.page.max_scroll);
            fire_transitions("scroll", std::nullopt, op);
            return std::nullopt;
        }
        case EnvOpKind::navigate: {
            for (const auto& [id, page] : pack_.pages) {
                if (page.url == op.text) {
                    auto& tab = tabs_.back();
                    tab.back.push_back(tab.page);
                    tab.forward.clear();
                    tab.page = fresh(id);
                    return std::nullopt;
                }
            }
            return ExecError{ErrorCode::EnvironmentError, "no page at " + op.text};
        }
        case EnvOpKind::go_back: {
            auto& tab = tabs_.back();
            if (tab.back.empty()) return std::nullopt;
            tab.forward.push_back(tab.page);
            tab.page = tab.back.back();
            tab.back.pop_back();
            return std::nullopt;
        }
        case EnvOpKind::go_forward: {
            auto& tab = tabs_.back();
            if (tab.forward.empty()) return std::nullopt;
            tab.back.push_back(tab.page);
            tab.page = tab.forward.back();
            tab.forward.pop_back();
            return std::nullopt;
        }
        case EnvOpKind::new_tab:
            tabs_.push_back(Tab{fresh(kBlankPage.id), {}, {}});
            return std::nullopt;
        case EnvOpKind::close_tab:
            if (tabs_.size() > 1) tabs_.pop_back();
            return std::nullopt;
        case EnvOpKind::wait:
            return std::nullopt;
    }
    return std::nullopt;
}

void SimulatedSite::fire_transitions(const std::string& op, const std::optional<std::string>& element, const EnvOp& raw) {
    const auto& st = state();
    for (const auto& t : pack_.transitions) {
        if (t.from != st.page.id || t.match.op != op) continue;
        const auto& m = t.match;
        if (m.element && m.element != element) continue;
        if (m.code && *m.code != raw.text) continue;
        if (m.value && *m.value != raw.text) continue;
        if (m.direction && *m.direction != raw.text) continue;
        if (m.url && *m.url != raw.text) continue;
        if (m.modal && *m.modal != st.modal.value_or("")) continue;
        if (m.value_contains) {
            std::string current;
            if (st.focused) {
                for (const auto* e : live_elements()) {
                    if (e->key == *st.focused) current = e->value.value_or("");
                }
            }
            if (to_lower(current).find(to_lower(*m.value_contains)) == std::string::npos) continue;
        }
        apply_effect(t.effect);
        return;
    }
}

void SimulatedSite::apply_effect(const TransitionEffect& effect) {
    if (effect.to_page) {
        auto& tab = tabs_.back();
        tab.back.push_back(tab.page);
        tab.forward.clear();
        tab.page = fresh(*effect.to_page);
    }
    auto& st = state();
    if (effect.close_modal) st.modal.reset();
    if (effect.open_modal) st.modal = *effect.open_modal;
    if (st.focused && !reachable(*st.focused)) st.focused.reset();
    if (effect.set_text) st.page.text = *effect.set_text;
    for (const auto& m : effect.mutations) {
        if (auto* e = find_mutable(m.key)) {
            if (m.label) e->label = *m.label;
            if (m.value) e->value = *m.value;
            if (m.enabled) e->enabled = *m.enabled;
        }
    }
    for (const auto& key : effect.remove_elements) {
        auto& els = st.page.elements;
        els.erase(std::remove_if(els.begin(), els.end(), [&](const auto& e) { return e.key == key; }), els.end());
        if (st.focused == key) st.focused.reset();
    }
    for (const auto& e : effect.add_elements) {
        if (!find_mutable(e.key)) st.page.elements.push_back(e);
    }
}

RasterHandle SimulatedSite::render() const {
    const int w = pack_.viewport_width;
    const int h = pack_.viewport_height;
    auto raster = std::make_shared<Raster>(w, h, Rgb{255, 255, 255});
    auto px = [&](const Rect& r) {
        return std::array<int, 4>{r.x0 * (w - 1) / kNormalizedMax, r.y0 * (h - 1) / kNormalizedMax,
                                  r.x1 * (w - 1) / kNormalizedMax, r.y1 * (h - 1) / kNormalizedMax};
    };
    auto draw = [&](const ElementRecord& e) {
        auto [x0, y0, x1, y1] = px(e.bbox);
        raster->fill_rect(x0, y0, x1, y1, role_color(e.role));
        bool focused = state().focused == e.key;
        raster->outline_rect(x0, y0, x1, y1, focused ? Rgb{20, 20, 160} : Rgb{90, 90, 90}, focused ? 3 : 1);
    };
    for (const auto& e : state().page.elements) draw(e);
    if (state().modal) {
        for (std::size_t i = 0; i < raster->pixels.size(); ++i) raster->pixels[i] = static_cast<std::uint8_t>(raster->pixels[i] / 2);
        const auto& modal = state().page.modals.at(*state().modal);
        auto [x0, y0, x1, y1] = px(modal.bbox);
        raster->fill_rect(x0, y0, x1, y1, Rgb{255, 255, 255});
        raster->outline_rect(x0, y0, x1, y1, Rgb{40, 40, 40}, 2);
        for (const auto& e : modal.elements) draw(e);
    }
    return raster;
}

}  // namespace wayfarer
