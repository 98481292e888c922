#pragma once

#include <json.hpp>

#include "runner.hpp"
#include "specpoll/catalog.hpp"

namespace specpoll::cli
{

/// Window used to list the discrete part of the expected limit set.
inline constexpr double kListingWindow = 50.0;

/// Stable description of the catalog for `specpoll list-examples`.
inline json list_examples()
{
    json out = json::array();
    for (const auto& name : catalog::example_names()) {
        const auto ex = catalog::get_example(name);
        json params = json::array();
        for (const auto& p : catalog::param_schema(name))
            params.push_back({{"name", p.name},
                              {"default", p.default_value},
                              {"lo", p.lo},
                              {"hi", p.hi},
                              {"lo_open", p.lo_open},
                              {"hi_open", p.hi_open},
                              {"integer", p.integer},
                              {"description", p.description}});
        json expected{{"essential", nums(ex.expected.essential)},
                      {"discrete_window", {-kListingWindow, kListingWindow}},
                      {"discrete", nums(ex.expected.discrete_in(-kListingWindow, kListingWindow))},
                      {"pollution", nums(ex.expected.pollution)}};
        out.push_back({{"name", name},
                       {"selfadjoint", ex.selfadjoint},
                       {"semi_bounded", ex.op ? ex.op->semi_bounded() : false},
                       {"has_partner", ex.partner.has_value()},
                       {"params", params},
                       {"expected", expected}});
    }
    return out;
}

} // namespace specpoll::cli
