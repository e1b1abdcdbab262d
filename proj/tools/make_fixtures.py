#!/usr/bin/env python3
"""Generate the scripted-oracle fixtures and the rule corpus.

Every policy case below becomes an action_select fixture plus the
describe_rule / generate_rule (and, where given, repair_rule) answers that
turn the choice into a production. The final DSL of each case is also
written to data/rules/<id>.prod.

    python3 tools/make_fixtures.py [--data DIR]
"""

import argparse
import json
from pathlib import Path

FAMILIES = {
    "explore": "explore <receptacle>",
    "find": "find a/an <object>",
    "pick_place": "pick and place a/an <object> in/on a/an <receptacle>",
    "slice": "slice a/an <sliceable>",
    "clear": "put things on the countertop away",
}

END_CONDITIONS = {
    "explore": "the robot has fully explored the receptacle.",
    "find": "the robot has found the object and has it in its gripper.",
    "pick_place": "the robot has successfully picked up the specified object and placed it in/on the "
    "specified receptacle, and the robot's gripper is empty.",
    "slice": "the sliceable object is already sliced and the robot's gripper is holding a knife.",
    "clear": "all objects on the countertops have been put away in the cabinets and there are no more "
    "unexplored countertops or cabinets.",
}

STORAGE = {
    "apple": "fridge",
    "lettuce": "fridge",
    "tomato": "fridge",
    "egg": "fridge",
    "potato": "cabinet",
    "bread": "cabinet",
    "mug": "cabinet",
    "cup": "cabinet",
    "knife": "cabinet",
}


def rule(rid, fam, when, then, desc, binds=()):
    lines = [f"production {rid} {{", f'  task: "{FAMILIES[fam]}"']
    lines += [f"  bind {b}" for b in binds]
    lines.append("  when {")
    lines += [f"    {w}" for w in when]
    lines.append("  }")
    lines.append(f"  then {then}")
    lines.append(f'  desc: "{desc}"')
    lines.append("}")
    return "\n".join(lines) + "\n"


def case(rid, fam, sig, option, purpose, specific, correspondence, when, then, desc, binds=(), first=None):
    return dict(
        id=rid,
        fam=fam,
        sig=sig,
        option=option,
        purpose=purpose,
        specific=specific,
        correspondence=correspondence,
        dsl=rule(rid, fam, when, then, desc, binds),
        first=first,
        desc=desc,
    )


DONE = "special action: 'done'"
QUIT = "special action: 'quit'"

CASES = [
    # ---- explore <receptacle> ----
    case("explore_done", "explore", "rexp=fully", DONE, "the receptacle has been fully explored",
         "IF the task is explore ${receptacle} AND ${receptacle} is fully explored THEN choose done",
         "<receptacle> = ${receptacle}",
         ["explored <receptacle> full"], "done",
         "IF the task is explore <receptacle> AND <receptacle> is fully explored THEN choose done"),
    case("explore_open", "explore", "rat=y;rst=closed", "motor action: open ${receptacle}",
         "look inside the closed receptacle",
         "IF the task is explore ${receptacle} AND the robot is at ${receptacle} AND it is closed THEN open it",
         "<receptacle> = ${receptacle}",
         ["at <receptacle>", "state <receptacle> closed"], 'motor "open <receptacle>"',
         "IF the task is explore <receptacle> AND the robot is at <receptacle> AND <receptacle> is closed "
         "THEN open <receptacle>"),
    case("explore_move", "explore", "rat=n", "motor action: move to ${receptacle}",
         "go to the receptacle to explore it",
         "IF the task is explore ${receptacle} AND the robot is not at ${receptacle} THEN move to it",
         "<receptacle> = ${receptacle}",
         ["not at <receptacle>", "not explored <receptacle> full"], 'motor "move to <receptacle>"',
         "IF the task is explore <receptacle> AND the robot is not at <receptacle> AND <receptacle> is not fully "
         "explored THEN move to <receptacle>"),
    # ---- find a/an <object> ----
    case("find_done", "find", "grip=target", DONE, "the object is in the gripper",
         "IF the task is find a/an ${target} AND the robot holds ${target_id} THEN choose done",
         "<object> = ${target}",
         ["holding <object>"], "done",
         "IF the task is find a/an <object> AND the robot is holding <object> THEN choose done"),
    case("find_pick", "find", "grip=empty;tloc=here", "motor action: pick up ${target_id}",
         "take the object that is in view",
         "IF the task is find a/an ${target} AND the gripper is empty AND ${target_id} is in view THEN pick it up",
         "<object> = ${target}",
         ["gripper empty", "visible <object>"], 'motor "pick up <object>"',
         "IF the task is find a/an <object> AND the gripper is empty AND <object> is in view THEN pick up <object>"),
    case("find_move", "find", "grip=empty;tloc=known", "motor action: move to ${target_loc}",
         "go to where the object was seen",
         "IF the task is find a/an ${target} AND ${target_id} is known to be in ${target_loc} THEN move there",
         "<object> = ${target}\n<place> = ${target_loc}",
         ["gripper empty", "not visible <object>", "not at <place>"], 'motor "move to <place>"',
         "IF the task is find a/an <object> AND the gripper is empty AND <object> is known to be in <place> "
         "THEN move to <place>",
         binds=["<place> = nearest of receptacles holding <object>"]),
    case("find_explore_storage", "find", "grip=empty;tloc=unknown;stor=y",
         "attend to subtask: explore ${storage_unexplored}",
         "search where the object is usually kept",
         "IF the task is find a/an ${target} AND its location is unknown AND ${storage_unexplored} is an "
         "unexplored place where it is commonly stored THEN explore ${storage_unexplored}",
         "<object> = ${target}\n<place> = ${storage_unexplored}",
         ["gripper empty", "unlocated <object>"], 'subtask "explore <place>"',
         "IF the task is find a/an <object> AND the location of <object> is unknown AND <place> is the nearest "
         "unexplored receptacle where <object> is commonly stored THEN explore <place>",
         binds=["<place> = nearest of storage of <object> unexplored"]),
    case("find_explore_any", "find", "grip=empty;tloc=unknown;stor=n;unexp=y",
         "attend to subtask: explore ${nearest_unexplored}",
         "search the nearest receptacle not yet explored",
         "IF the task is find a/an ${target} AND its location is unknown AND no usual storage place is left "
         "unexplored THEN explore ${nearest_unexplored}",
         "<object> = ${target}\n<place> = ${nearest_unexplored}",
         ["gripper empty", "unlocated <object>", "not exists storage of <object> unexplored"],
         'subtask "explore <place>"',
         "IF the task is find a/an <object> AND the location of <object> is unknown AND every storage place for "
         "<object> is explored THEN explore the nearest unexplored receptacle <place>",
         binds=["<place> = nearest of unexplored receptacles"]),
    case("find_quit", "find", "tloc=unknown;unexp=n", QUIT, "the object is nowhere in the kitchen",
         "IF the task is find a/an ${target} AND it was not seen AND every receptacle is explored THEN quit",
         "<object> = ${target}",
         ["unlocated <object>", "not exists unexplored receptacles"], "quit",
         "IF the task is find a/an <object> AND <object> was not seen AND every receptacle is explored THEN quit"),
    # ---- pick and place a/an <object> in/on a/an <receptacle> ----
    case("pp_done", "pick_place", "tin=y;grip=empty", DONE, "the object is in place and the gripper is empty",
         "IF the task is pick and place ${target} in ${receptacle} AND it is there AND the gripper is empty "
         "THEN choose done",
         "<object> = ${target}\n<receptacle> = ${receptacle}",
         ["in <object> <receptacle>", "gripper empty"], "done",
         "IF the task is pick and place a/an <object> in/on a/an <receptacle> AND <object> is in <receptacle> AND "
         "the gripper is empty THEN choose done"),
    case("pp_move_dest", "pick_place", "grip=target;rst=closed;rat=n", "motor action: move to ${target_rec}",
         "go to the closed destination",
         "IF the task is pick and place ${target} in ${receptacle} AND the robot holds it AND ${target_rec} is "
         "closed and far THEN move to ${target_rec}",
         "<object> = ${target}\n<receptacle> = ${receptacle}\n<dest> = ${target_rec}",
         ["holding <object>", "state <dest> closed", "not at <dest>"], 'motor "move to <dest>"',
         "IF the task is pick and place a/an <object> in/on a/an <receptacle> AND the robot holds <object> AND "
         "the nearest <receptacle> <dest> is closed AND the robot is not at <dest> THEN move to <dest>",
         binds=["<dest> = nearest of receptacles type <receptacle>"]),
    case("pp_open_dest", "pick_place", "grip=target;rst=closed;rat=y", "motor action: open ${target_rec}",
         "open the destination",
         "IF the task is pick and place ${target} in ${receptacle} AND the robot holds it AND is at the closed "
         "${target_rec} THEN open it",
         "<object> = ${target}\n<receptacle> = ${receptacle}\n<dest> = ${target_rec}",
         ["holding <object>", "at <dest>", "state <dest> closed"], 'motor "open <dest>"',
         "IF the task is pick and place a/an <object> in/on a/an <receptacle> AND the robot holds <object> AND "
         "is at the closed <dest> THEN open <dest>",
         binds=["<dest> = nearest of receptacles type <receptacle>"]),
    case("pp_put", "pick_place", "grip=target", "motor action: put ${target_id} on ${target_rec}",
         "place the object",
         "IF the task is pick and place ${target} in ${receptacle} AND the robot holds it AND ${target_rec} is "
         "not closed THEN put it there",
         "<object> = ${target}\n<receptacle> = ${receptacle}\n<dest> = ${target_rec}",
         ["holding <object>", "not state <dest> closed"], 'motor "put <object> on <dest>"',
         "IF the task is pick and place a/an <object> in/on a/an <receptacle> AND the robot holds <object> AND "
         "the nearest <receptacle> <dest> is not closed THEN put <object> on <dest>",
         binds=["<dest> = nearest of receptacles type <receptacle>"]),
    case("pp_pick", "pick_place", "grip=empty;tin=n;tloc=here", "motor action: pick up ${target_id}",
         "take the object",
         "IF the task is pick and place ${target} in ${receptacle} AND the gripper is empty AND ${target_id} is "
         "in view THEN pick it up",
         "<object> = ${target}\n<receptacle> = ${receptacle}",
         ["gripper empty", "visible <object>", "not in <object> <receptacle>"], 'motor "pick up <object>"',
         "IF the task is pick and place a/an <object> in/on a/an <receptacle> AND the gripper is empty AND "
         "<object> is in view AND not yet in <receptacle> THEN pick up <object>"),
    case("pp_move_obj", "pick_place", "grip=empty;tin=n;tloc=known", "motor action: move to ${target_loc}",
         "go to the object",
         "IF the task is pick and place ${target} in ${receptacle} AND the gripper is empty AND ${target_id} is "
         "in ${target_loc} THEN move there",
         "<object> = ${target}\n<receptacle> = ${receptacle}\n<place> = ${target_loc}",
         ["gripper empty", "not visible <object>", "not in <object> <receptacle>"], 'motor "move to <place>"',
         "IF the task is pick and place a/an <object> in/on a/an <receptacle> AND the gripper is empty AND "
         "<object> is known to be in <place> THEN move to <place>",
         binds=["<place> = nearest of receptacles holding <object>"]),
    case("pp_find", "pick_place", "grip=empty;tloc=unknown", "attend to subtask: find a/an ${target}",
         "the object has to be found first",
         "IF the task is pick and place ${target} in ${receptacle} AND the location of ${target} is unknown "
         "THEN find it",
         "<object> = ${target}\n<receptacle> = ${receptacle}",
         ["gripper empty", "unlocated <object>"], 'subtask "find a/an <object>"',
         "IF the task is pick and place a/an <object> in/on a/an <receptacle> AND the location of <object> is "
         "unknown THEN find a/an <object>"),
    # ---- slice a/an <sliceable> ----
    case("slice_done", "slice", "tsl=y", DONE, "the object is sliced",
         "IF the task is slice a/an ${target} AND it is sliced THEN choose done",
         "<sliceable> = ${target}",
         ["has <sliceable> sliced"], "done",
         "IF the task is slice a/an <sliceable> AND <sliceable> is sliced THEN choose done"),
    case("slice_cut", "slice", "grip=knife;tloc=here", "motor action: slice ${target_id}",
         "slice the object with the knife",
         "IF the task is slice a/an ${target} AND the robot holds a knife AND ${target_id} is in view THEN slice it",
         "<sliceable> = ${target}",
         ['holding "Knife"', "visible <sliceable>", "not has <sliceable> sliced"], 'motor "slice <sliceable>"',
         "IF the task is slice a/an <sliceable> AND the robot holds a knife AND <sliceable> is in view and not "
         "sliced THEN slice <sliceable>"),
    case("slice_move", "slice", "grip=knife;tloc=known", "motor action: move to ${target_loc}",
         "bring the knife to the object",
         "IF the task is slice a/an ${target} AND the robot holds a knife AND ${target_id} is in ${target_loc} "
         "THEN move there",
         "<sliceable> = ${target}\n<place> = ${target_loc}",
         ['holding "Knife"', "not visible <sliceable>", "not has <sliceable> sliced"], 'motor "move to <place>"',
         "IF the task is slice a/an <sliceable> AND the robot holds a knife AND <sliceable> is in <place> THEN "
         "move to <place>",
         binds=["<place> = nearest of receptacles holding <sliceable>"]),
    case("slice_put_countertop", "slice", "grip=target;tsl=n",
         "motor action: put ${target_id} on ${nearest_countertop}",
         "a countertop is a good place for slicing",
         "IF the task is slice a/an ${target} AND the robot holds ${target_id} AND it is not sliced THEN put it on "
         "${nearest_countertop}",
         "<sliceable> = ${target}\n<countertop> = ${nearest_countertop}",
         ['task "slice a/an <sliceable>"', "holding <sliceable>", "not has <sliceable> sliced",
          'exists receptacles type "CounterTop"'],
         'motor "put <sliceable> on <countertop>"',
         "IF the task is slice a/an <sliceable> AND the robot holds <sliceable> AND it is not sliced AND there is "
         "a countertop THEN put <sliceable> on the nearest countertop <countertop>",
         binds=['<countertop> = nearest of receptacles type "CounterTop"'],
         first=['task "slice a/an <sliceable>"', "holding <sliceable>",
                'world false "<location> is a suitable place for slicing"',
                'exists receptacles type "CounterTop"']),
    case("slice_find_knife", "slice", "grip=empty;tct=y;tsl=n", "attend to subtask: find a/an Knife",
         "a knife is needed",
         "IF the task is slice a/an ${target} AND ${target_id} is on a countertop AND the gripper is empty THEN "
         "find a knife",
         "<sliceable> = ${target}",
         ["gripper empty", 'in <sliceable> "CounterTop"', "not has <sliceable> sliced"],
         'subtask "find a/an Knife"',
         "IF the task is slice a/an <sliceable> AND <sliceable> is on a countertop AND the gripper is empty THEN "
         "find a/an Knife"),
    case("slice_find_object", "slice", "grip=empty;tct=n;tsl=n", "attend to subtask: find a/an ${target}",
         "the object has to be found and brought to a countertop",
         "IF the task is slice a/an ${target} AND it is not on a countertop AND the gripper is empty THEN find it",
         "<sliceable> = ${target}",
         ["gripper empty", 'not in <sliceable> "CounterTop"', "not has <sliceable> sliced"],
         'subtask "find a/an <sliceable>"',
         "IF the task is slice a/an <sliceable> AND <sliceable> is not on a countertop AND the gripper is empty "
         "THEN find a/an <sliceable>"),
    # ---- put things on the countertop away ----
    case("clear_put_away", "clear", "ctobj=y;cabempty=y",
         "attend to subtask: pick and place a/an ${ct_item} in/on a/an ${empty_cabinet}",
         "store a countertop item in an empty cabinet",
         "IF the task is to put things away AND ${ct_item} is on a countertop AND ${empty_cabinet} is empty THEN "
         "pick and place ${ct_item} in ${empty_cabinet}",
         "<item> = ${ct_item}\n<cabinet> = ${empty_cabinet}",
         ["gripper empty"], 'subtask "pick and place a/an <item> in/on a/an <cabinet>"',
         "IF the task is put things on the countertop away AND <item> is on a countertop AND <cabinet> is an "
         "empty cabinet THEN pick and place <item> in <cabinet>",
         binds=['<item> = first of objects in "CounterTop"',
                '<cabinet> = nearest of empty receptacles type "Cabinet"']),
    case("clear_explore_cabinet", "clear", "ctobj=y;cabempty=n;cabunexp=y",
         "attend to subtask: explore ${unexplored_cabinet}",
         "look for an empty cabinet",
         "IF the task is to put things away AND items remain on countertops AND no cabinet is known to be empty "
         "THEN explore ${unexplored_cabinet}",
         "<cabinet> = ${unexplored_cabinet}",
         ['exists objects in "CounterTop"', 'not exists empty receptacles type "Cabinet"'],
         'subtask "explore <cabinet>"',
         "IF the task is put things on the countertop away AND items remain on countertops AND no known cabinet is "
         "empty THEN explore the nearest unexplored cabinet <cabinet>",
         binds=['<cabinet> = nearest of unexplored receptacles type "Cabinet"']),
    case("clear_explore_countertop", "clear", "ctobj=n;ctunexp=y",
         "attend to subtask: explore ${unexplored_countertop}",
         "look for items on countertops",
         "IF the task is to put things away AND no item is known on a countertop AND ${unexplored_countertop} is "
         "unexplored THEN explore it",
         "<ct> = ${unexplored_countertop}",
         ['not exists objects in "CounterTop"'], 'subtask "explore <ct>"',
         "IF the task is put things on the countertop away AND no item is known on a countertop THEN explore the "
         "nearest unexplored countertop <ct>",
         binds=['<ct> = nearest of unexplored receptacles type "CounterTop"']),
    case("clear_done", "clear", "ctobj=n;ctunexp=n", DONE, "every countertop is clear",
         "IF the task is to put things away AND all countertops are explored and clear THEN choose done",
         "(none)",
         ['not exists objects in "CounterTop"', 'not exists unexplored receptacles type "CounterTop"'], "done",
         "IF the task is put things on the countertop away AND no item is on a countertop AND every countertop is "
         "explored THEN choose done"),
]


def action_response(c):
    return (
        "[Current Task]\n${task}\n\n"
        "[Goal Conditions]\nSee the task family.\n\n"
        "[Current Situation Analysis]\nSee the spatial and object knowledge.\n\n"
        "[Plan]\n" + c["purpose"] + ".\n\n"
        "[Option Evaluation]\nOnly one option serves the plan.\n\n"
        f"[Option Suggestion]\n\"{c['option']}\"\n\n"
        f"[Purpose]\n{c['purpose']}\n\n[End]\n"
    )


def describe_response(c):
    generalized = c["desc"]
    return (
        "[Relevant Information]\nThe current task, the gripper and the known receptacles.\n\n"
        f"[Specific Rule]\n{c['specific']}\n\n"
        "[Generalizable Constants]\nThe task arguments and the receptacles chosen from knowledge.\n\n"
        f"[Generalized Rule]\n{generalized}\n\n"
        f"[Correspondence]\n{c['correspondence']}\n"
    )


def code_block(src):
    return "Variables are bound from the task and from spatial knowledge.\n\n```\n" + src + "```\n"


def signature(c):
    return f"fam={c['fam']};" + c["sig"]


def build():
    fixtures = []
    for c in CASES:
        fixtures.append({"kind": "action_select", "signature": signature(c), "response": action_response(c)})
    for c in CASES:
        fixtures.append({"kind": "describe_rule", "signature": signature(c), "response": describe_response(c)})
    for c in CASES:
        if c["first"]:
            first = c["dsl"].replace(
                "  when {\n" + "".join(f"    {w}\n" for w in c["dsl_when"]),
                "  when {\n" + "".join(f"    {w}\n" for w in c["first"]),
            )
            fixtures.append({"kind": "generate_rule", "signature": signature(c), "response": code_block(first)})
            fixtures.append({"kind": "repair_rule", "signature": signature(c), "response": code_block(c["dsl"])})
        else:
            fixtures.append({"kind": "generate_rule", "signature": signature(c), "response": code_block(c["dsl"])})
    for fam in FAMILIES:
        fixtures.append({
            "kind": "critic",
            "signature": f"fam={fam}",
            "response": f"[End Condition]\n{END_CONDITIONS[fam]}\n\n[Verdicts]\n${{verdicts}}",
        })
    for obj, rec in sorted(STORAGE.items()):
        fixtures.append({"kind": "knowledge_query", "signature": f"stmt={obj} is commonly stored in {rec}",
                         "response": "Yes"})
    fixtures.append({"kind": "knowledge_query", "signature": "stmt=* is commonly stored in *", "response": "No"})
    fixtures.append({"kind": "knowledge_query", "signature": "stmt=* is a suitable place for slicing",
                     "response": "That depends on the kitchen."})
    return fixtures


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", default=str(Path(__file__).resolve().parent.parent / "data"))
    args = ap.parse_args()
    data = Path(args.data)
    for c in CASES:
        c["dsl_when"] = [l.strip() for l in c["dsl"].split("  when {\n")[1].split("  }\n")[0].splitlines()]
    (data / "fixtures").mkdir(parents=True, exist_ok=True)
    (data / "fixtures" / "scripted_oracle.json").write_text(json.dumps(build(), indent=2) + "\n")
    (data / "rules").mkdir(parents=True, exist_ok=True)
    for c in CASES:
        (data / "rules" / f"{c['id']}.prod").write_text(c["dsl"])
    print(f"{len(build())} fixtures, {len(CASES)} rules")


if __name__ == "__main__":
    main()
