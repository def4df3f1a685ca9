#!/usr/bin/env python3
"""Regenerates fixtures/editing, fixtures/benchmark and fixtures/pairs.

Expected models are computed here with a small Python reading of the five
edit functions, independently of the Rust edit engine, then checked with
`bpmn-assist validate`. XML variants come from `bpmn-assist convert`.

    cargo build -p bpmn-cli && python3 fixtures/build_fixtures.py
"""

import copy
import json
import shutil
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent
CLI = ROOT.parent / "target" / "debug" / "bpmn-assist"


# --- element builders -------------------------------------------------------

def task(id, label, kind="task"):
    return {"type": kind, "id": id, "label": label}


def start(id="start"):
    return {"type": "startEvent", "id": id}


def end(id="end"):
    return {"type": "endEvent", "id": id}


def branch(condition, path=(), next=None):
    b = {"condition": condition, "path": list(path)}
    if next is not None:
        b["next"] = next
    return b


def xor(id, label, has_join, branches):
    return {"type": "exclusiveGateway", "id": id, "label": label, "has_join": has_join, "branches": list(branches)}


def par(id, branches):
    return {"type": "parallelGateway", "id": id, "branches": [list(b) for b in branches]}


def model(*elements):
    return {"process": list(elements)}


# --- reference edit functions ----------------------------------------------

def sequences(seq):
    yield seq
    for el in seq:
        if el["type"] == "exclusiveGateway":
            for b in el["branches"]:
                yield from sequences(b["path"])
        elif el["type"] == "parallelGateway":
            for b in el["branches"]:
                yield from sequences(b)


def locate(m, id):
    for seq in sequences(m["process"]):
        for i, el in enumerate(seq):
            if el["id"] == id:
                return seq, i
    raise KeyError(id)


def anchor_index(m, before, after):
    seq, i = locate(m, before or after)
    return seq, i if before else i + 1


def op_delete(m, element_id):
    seq, i = locate(m, element_id)
    del seq[i]


def op_add(m, element, before_id=None, after_id=None):
    seq, i = anchor_index(m, before_id, after_id)
    seq.insert(i, element)


def op_move(m, element_id, before_id=None, after_id=None):
    seq, i = locate(m, element_id)
    el = seq.pop(i)
    seq, i = anchor_index(m, before_id, after_id)
    seq.insert(i, el)


def op_update(m, new_element):
    seq, i = locate(m, new_element["id"])
    seq[i] = new_element


def op_redirect(m, branch_condition, next_id):
    want = branch_condition.strip().lower()
    for seq in sequences(m["process"]):
        for el in seq:
            if el["type"] == "exclusiveGateway":
                for b in el["branches"]:
                    if b["condition"].strip().lower() == want:
                        b["next"] = next_id
                        return
    raise KeyError(branch_condition)


OPS = {
    "delete_element": op_delete,
    "add_element": op_add,
    "move_element": op_move,
    "update_element": op_update,
    "redirect_branch": op_redirect,
}


def call(function, **arguments):
    return {"function": function, "arguments": arguments}


def apply(m, calls):
    out = copy.deepcopy(m)
    for c in calls:
        OPS[c["function"]](out, **copy.deepcopy(c["arguments"]))
    return out


# --- base models ------------------------------------------------------------

ORDER = model(
    start(),
    task("t_receive", "Receive order"),
    task("t_check", "Check stock", "userTask"),
    xor("g_stock", "Stock available?", True, [
        branch("yes", [task("t_ship", "Ship goods", "serviceTask")]),
        branch("no", [task("t_order", "Order from supplier")]),
    ]),
    task("t_invoice", "Send invoice"),
    end(),
)

PROCUREMENT = json.loads((ROOT / "models" / "procurement.canonical.json").read_text())

REVIEW = model(
    start(),
    task("t_draft", "Draft report"),
    task("t_review", "Review report", "userTask"),
    xor("g_ok", "Approved?", False, [
        branch("approved", [task("t_publish", "Publish report"), end("end_ok")]),
        branch("changes requested", [task("t_revise", "Revise report")], next="t_review"),
    ]),
)

CLAIM = model(
    start(),
    task("t_submit", "Submit claim", "userTask"),
    par("p_checks", [
        [task("t_verify", "Verify policy")],
        [task("t_assess", "Assess damage"), task("t_estimate", "Estimate cost")],
    ]),
    xor("g_amount", "Amount high?", True, [
        branch("high", [task("t_manager", "Manager approval", "userTask")]),
        branch("low", [task("t_auto", "Approve automatically", "serviceTask")]),
    ]),
    task("t_pay", "Pay claim", "serviceTask"),
    end(),
)

HIRING = model(
    start(),
    task("t_post", "Post job"),
    task("t_screen", "Screen candidates"),
    xor("g_fit", "Suitable candidate?", False, [
        branch("yes", [task("t_interview", "Interview", "userTask"), task("t_offer", "Send offer"), end("end_hired")]),
        branch("no", [task("t_reject", "Send rejection"), end("end_rejected")]),
        branch("unsure", [task("t_call", "Schedule phone screen")], next="g_fit"),
    ]),
)

MODELS = {"order": ORDER, "procurement": PROCUREMENT, "review": REVIEW, "claim": CLAIM, "hiring": HIRING}


# --- editing suite ----------------------------------------------------------

EDITS = [
    # order
    ("e01", "order", "Remove the invoicing step.", [call("delete_element", element_id="t_invoice")]),
    ("e02", "order", "After receiving the order, a clerk confirms it.",
     [call("add_element", element=task("t_confirm", "Confirm order", "userTask"), after_id="t_receive")]),
    ("e03", "order", "Archive the order automatically right before the process ends.",
     [call("add_element", element=task("t_archive", "Archive order", "serviceTask"), before_id="end")]),
    ("e04", "order", "Rename the stock check to 'Check warehouse stock'.",
     [call("update_element", new_element=task("t_check", "Check warehouse stock", "userTask"))]),
    ("e05", "order", "Send the invoice before checking availability.",
     [call("move_element", element_id="t_invoice", before_id="g_stock")]),
    ("e06", "order", "When ordering from the supplier, wait for the delivery afterwards.",
     [call("add_element", element=task("t_wait", "Wait for delivery"), after_id="t_order")]),
    ("e07", "order", "Add a third case: if stock is partially available, split the shipment.",
     [call("update_element", new_element=xor("g_stock", "Stock available?", True, [
         branch("yes", [task("t_ship", "Ship goods", "serviceTask")]),
         branch("no", [task("t_order", "Order from supplier")]),
         branch("partially", [task("t_split", "Split shipment")]),
     ]))]),
    ("e08", "order", "Drop the availability decision entirely.", [call("delete_element", element_id="g_stock")]),
    # procurement
    ("e09", "procurement", "Do not prepare the documents.", [call("delete_element", element_id="task2")]),
    ("e10", "procurement", "After picking up the goods, check them.",
     [call("add_element", element=task("task5", "Check the goods"), after_id="task4")]),
    ("e11", "procurement", "Prepare the documents before mailing the supplier.",
     [call("move_element", element_id="task2", before_id="task1")]),
    ("e12", "procurement", "Searching for the goods is done by a person in the warehouse.",
     [call("update_element", new_element=task("task3", "Search the warehouse", "userTask"))]),
    ("e13", "procurement", "In parallel, also notify the customer.",
     [call("update_element", new_element=par("parallel1", [
         [task("task1", "Send mail to supplier", "serviceTask"), task("task2", "Prepare the documents")],
         [task("task3", "Search for the goods"), task("task4", "Pick up the goods")],
         [task("task6", "Notify the customer")],
     ]))]),
    ("e14", "procurement", "A manager approves the purchase first.",
     [call("add_element", element=task("task0", "Approve purchase", "userTask"), before_id="parallel1")]),
    ("e15", "procurement", "Replace the supplier mail with an automatic email sent after the documents are ready.",
     [call("delete_element", element_id="task1"),
      call("add_element", element=task("task1b", "Email supplier", "serviceTask"), after_id="task2")]),
    ("e16", "procurement", "Pick up the goods only once both branches are complete.",
     [call("move_element", element_id="task4", after_id="parallel1")]),
    # review
    ("e17", "review", "When changes are requested, go back to drafting.",
     [call("redirect_branch", branch_condition="changes requested", next_id="t_draft")]),
    ("e18", "review", "Notify the author automatically after publishing.",
     [call("add_element", element=task("t_notify", "Notify author", "serviceTask"), after_id="t_publish")]),
    ("e19", "review", "Call the review step 'Peer review'.",
     [call("update_element", new_element=task("t_review", "Peer review", "userTask"))]),
    ("e20", "review", "Skip the revision task; requested changes go straight back to review.",
     [call("delete_element", element_id="t_revise")]),
    ("e21", "review", "Assign an author before drafting.",
     [call("add_element", element=task("t_assign", "Assign author"), before_id="t_draft")]),
    ("e22", "review", "Check the revisions after revising, and call publishing 'Publish online'.",
     [call("add_element", element=task("t_recheck", "Check revisions"), after_id="t_revise"),
      call("update_element", new_element=task("t_publish", "Publish online"))]),
    ("e23", "review", "Label the decision 'Report approved?'.",
     [call("update_element", new_element=xor("g_ok", "Report approved?", False, [
         branch("approved", [task("t_publish", "Publish report"), end("end_ok")]),
         branch("changes requested", [task("t_revise", "Revise report")], next="t_review"),
     ]))]),
    ("e24", "review", "Format the report before publishing it.",
     [call("add_element", element=task("t_format", "Format report", "userTask"), before_id="t_publish")]),
    # claim
    ("e25", "claim", "Cost estimation is no longer needed.", [call("delete_element", element_id="t_estimate")]),
    ("e26", "claim", "Estimate the cost after verifying the policy instead.",
     [call("move_element", element_id="t_estimate", after_id="t_verify")]),
    ("e27", "claim", "Notify the customer automatically after payment.",
     [call("add_element", element=task("t_notify", "Notify customer", "serviceTask"), after_id="t_pay")]),
    ("e28", "claim", "High amounts need a senior manager.",
     [call("update_element", new_element=task("t_manager", "Senior manager approval", "userTask"))]),
    ("e29", "claim", "Remove the parallel checks.", [call("delete_element", element_id="p_checks")]),
    ("e30", "claim", "Calculate the payout before deciding on the amount.",
     [call("add_element", element=task("t_calc", "Calculate payout"), before_id="g_amount")]),
    ("e31", "claim", "Medium amounts are approved by a team lead.",
     [call("update_element", new_element=xor("g_amount", "Amount high?", True, [
         branch("high", [task("t_manager", "Manager approval", "userTask")]),
         branch("medium", [task("t_team", "Team lead approval", "userTask")]),
         branch("low", [task("t_auto", "Approve automatically", "serviceTask")]),
     ]))]),
    ("e32", "claim", "Request photos after assessing the damage, and drop the estimate.",
     [call("add_element", element=task("t_photo", "Request photos"), after_id="t_assess"),
      call("delete_element", element_id="t_estimate")]),
    # hiring
    ("e33", "hiring", "Unsure candidates are screened again.",
     [call("redirect_branch", branch_condition="unsure", next_id="t_screen")]),
    ("e34", "hiring", "The candidate signs the contract after the offer.",
     [call("add_element", element=task("t_sign", "Sign contract", "userTask"), after_id="t_offer")]),
    ("e35", "hiring", "No phone screen for unsure candidates.", [call("delete_element", element_id="t_call")]),
    ("e36", "hiring", "The job ad is published by the job portal.",
     [call("update_element", new_element=task("t_post", "Publish job ad", "serviceTask"))]),
    ("e37", "hiring", "Screen the existing candidates before posting the job.",
     [call("move_element", element_id="t_screen", before_id="t_post")]),
    ("e38", "hiring", "Record the decision before sending a rejection.",
     [call("add_element", element=task("t_log", "Record decision", "serviceTask"), before_id="t_reject")]),
    ("e39", "hiring", "Collect applications after posting, and make the offer written.",
     [call("update_element", new_element=task("t_offer", "Send written offer")),
      call("add_element", element=task("t_collect", "Collect applications"), after_id="t_post")]),
    ("e40", "hiring", "Unsure candidates skip the phone screen and the job is posted again.",
     [call("delete_element", element_id="t_call"),
      call("redirect_branch", branch_condition="unsure", next_id="t_post")]),
]

# Scripts whose later steps fail; the input must come back unchanged.
FAILURES = [
    ("f01", "hiring", "Hired candidates need no end.",
     [call("add_element", element=task("t_welcome", "Welcome"), after_id="t_offer"),
      call("delete_element", element_id="end_hired")]),
    ("f02", "review", "Get rid of the review.",
     [call("update_element", new_element=task("t_draft", "Write report")),
      call("delete_element", element_id="t_review")]),
    ("f03", "procurement", "Mail the supplier again at the end.",
     [call("add_element", element=task("task1", "Send mail to supplier"), after_id="task4")]),
    ("f04", "procurement", "Put the whole parallel block after preparing documents.",
     [call("move_element", element_id="parallel1", after_id="task2")]),
    ("f05", "order", "Drop invoicing and add a ghost step.",
     [call("delete_element", element_id="t_invoice"),
      call("add_element", element=task("t_x", "Ghost"), after_id="t_ghost")]),
    ("f06", "order", "Rename the check.",
     [call("rename_element", element_id="t_check", label="Check")]),
    ("f07", "order", "Maybe go back to the start.",
     [call("delete_element", element_id="t_invoice"),
      call("redirect_branch", branch_condition="maybe", next_id="t_receive")]),
]


# --- benchmark suite --------------------------------------------------------

GENERATION = [
    ("g01", "A customer places an order. The order is checked and, if stock is available, shipped; otherwise it is "
            "ordered from the supplier. Finally an invoice is sent.", ORDER, ORDER),
    ("g02", "After the start, two things happen in parallel: the supplier is mailed and documents prepared, while the "
            "goods are searched for and picked up. Then the process ends.", PROCUREMENT,
     apply(PROCUREMENT, [call("update_element", new_element=task("task4", "Collect the goods"))])),
    ("g03", "An author drafts a report that is reviewed. Approved reports are published; otherwise the author revises "
            "and it is reviewed again.", REVIEW, REVIEW),
    ("g04", "A claim is submitted, then policy verification runs in parallel with damage assessment and cost "
            "estimation. High amounts need manager approval, low amounts are approved automatically. Then the claim "
            "is paid.", CLAIM, apply(CLAIM, [call("delete_element", element_id="t_estimate")])),
    ("g05", "A job is posted and candidates screened. Suitable candidates are interviewed and get an offer, "
            "unsuitable ones a rejection, unclear ones a phone screen before deciding again.", HIRING, HIRING),
]

BENCH_EDITS = ["e02", "e09", "e17", "e29", "e39"]


# --- pairs ------------------------------------------------------------------

def chain(label):
    return model(start(), task("a", label), end())


# --- writing ----------------------------------------------------------------

def write_json(path, value):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(value, indent=2) + "\n")


def run_cli(*args):
    out = subprocess.run([str(CLI), *map(str, args)], capture_output=True, text=True)
    if out.returncode != 0:
        sys.exit(f"bpmn-assist {' '.join(map(str, args))} failed:\n{out.stderr}")
    return out.stdout


def to_xml(path):
    return run_cli("convert", path, "--no-layout")


def fresh(dir):
    if dir.exists():
        shutil.rmtree(dir)
    dir.mkdir(parents=True)


def editing_suite():
    dir = ROOT / "editing"
    fresh(dir)
    for name, m in MODELS.items():
        write_json(dir / "models" / f"{name}.json", m)
    entries = []
    for tag, base, instruction, calls in EDITS:
        expected = apply(MODELS[base], calls)
        assert expected != MODELS[base], tag
        write_json(dir / "expected" / f"{tag}.json", expected)
        run_cli("validate", dir / "expected" / f"{tag}.json")
        write_json(dir / f"{tag}.task.json", {
            "id": tag, "kind": "editing", "input": f"models/{base}.json",
            "instruction": f"{instruction} [{tag}]", "expected": f"expected/{tag}.json",
        })
        entries.append({"purpose": "edit", "contains": f"[{tag}]", "response": {"json": calls}})
    failures = []
    for tag, base, instruction, calls in FAILURES:
        failures.append({"id": tag, "input": f"models/{base}.json", "instruction": f"{instruction} [{tag}]"})
        entries.append({"purpose": "edit", "contains": f"[{tag}]", "response": {"json": calls}})
    write_json(dir / "failures.json", failures)
    write_json(dir / "mock_script.json", {"entries": entries})


def benchmark_suite():
    dir = ROOT / "benchmark"
    fresh(dir)
    entries = []
    for tag, description, reference, candidate in GENERATION:
        write_json(dir / "references" / f"{tag}.json", reference)
        write_json(dir / "candidates" / f"{tag}.json", candidate)
        run_cli("validate", dir / "candidates" / f"{tag}.json")
        xml = to_xml(dir / "candidates" / f"{tag}.json")
        (dir / "candidates" / f"{tag}.bpmn").write_text(xml)
        write_json(dir / f"{tag}.task.json", {
            "id": tag, "kind": "generation", "description": f"{description} [{tag}]",
            "reference": f"references/{tag}.json",
        })
        entries.append({"purpose": "generate", "contains": [f"[{tag}]", "JSON format"], "response": {"json": candidate}})
        entries.append({"purpose": "generate", "contains": [f"[{tag}]", "BPMN 2.0 XML"], "response": xml})
    edits = {e[0]: e for e in EDITS}
    for n, source in enumerate(BENCH_EDITS, start=1):
        tag = f"b{n:02}"
        _, base, instruction, calls = edits[source]
        write_json(dir / "inputs" / f"{tag}.json", MODELS[base])
        expected = apply(MODELS[base], calls)
        write_json(dir / "expected" / f"{tag}.json", expected)
        xml = to_xml(dir / "expected" / f"{tag}.json")
        write_json(dir / f"{tag}.task.json", {
            "id": tag, "kind": "editing", "input": f"inputs/{tag}.json",
            "instruction": f"{instruction} [{tag}]", "expected": f"expected/{tag}.json",
        })
        entries.append({"purpose": "edit", "contains": [f"[{tag}]", "calling functions"], "response": {"json": calls}})
        entries.append({"purpose": "edit", "contains": [f"[{tag}]", "BPMN 2.0 XML"], "response": xml})
    write_json(dir / "mock_script.json", {"entries": entries})


def pairs():
    dir = ROOT / "pairs"
    fresh(dir)
    write_json(dir / "a.json", chain("A"))
    write_json(dir / "b.json", chain("B"))
    for name, m in MODELS.items():
        write_json(dir / f"{name}.json", m)
    (dir / "order.bpmn").write_text(to_xml(dir / "order.json"))
    write_json(dir / "claim_variant.json", apply(CLAIM, [call("delete_element", element_id="t_estimate")]))
    (dir / "broken.json").write_text('{"process": [{"type": "startEvent", "id": "s"}, \n')
    (dir / "identical.csv").write_text(
        "# reference,candidate\n" + "".join(f"{n}.json,{n}.json\n" for n in MODELS) + "order.json,order.bpmn\n")
    (dir / "ab.csv").write_text("a.json,b.json\n")
    (dir / "mixed.csv").write_text("a.json,b.json\nclaim.json,claim_variant.json\nreview.json,broken.json\n")


if __name__ == "__main__":
    if not CLI.exists():
        sys.exit("build the CLI first: cargo build -p bpmn-cli")
    editing_suite()
    benchmark_suite()
    pairs()
    print("fixtures written")
