"""
LangGraph workflow for the full acceptance suite.
validate -> drift -> spectral -> product -> pde -> chain rule -> consistency
         -> bsde -> feynman-kac -> haar -> finalize, with an early exit on rejected parameters.
"""
from typing import List, Literal

from langgraph.graph import END, StateGraph

from app.pipeline import anchors
from app.pipeline.checks import (
    Experiment,
    bsde_checks,
    chain_rule_checks,
    check_consistency,
    check_drift,
    check_feynman_kac,
    check_haar,
    check_linear_pde,
    check_parameters,
    check_product,
    check_semilinear_pde,
    check_spectral,
    guarded,
)
from app.pipeline.state import SuiteState, Verdict
from app.utils.errors import ParameterRejection
from app.utils.logger import logger


def _record(state: SuiteState, verdicts: List[Verdict], step: str) -> SuiteState:
    state["verdicts"] = state["verdicts"] + verdicts
    state["current_step"] = step
    return state


# === NODE FUNCTIONS ===

def validate_node(state: SuiteState) -> SuiteState:
    """Node 1: Check the parameter region before any numerics"""
    logger.info("📍 NODE: validate_node - Checking the parameter region")
    exp: Experiment = state["experiment"]
    try:
        exp.param
        state["params_valid"] = True
    except ParameterRejection as e:
        state["params_valid"] = False
        state["rejection"] = f"{e.code}: {e.reason}"
    return _record(state, check_parameters(exp), "validated")


def drift_node(state: SuiteState) -> SuiteState:
    """Node 2: Synthesize and certify the drift"""
    logger.info("📍 NODE: drift_node - Building the drift")
    exp = state["experiment"]
    return _record(state, guarded("drift", anchors.DRIFT_REGULARITY, lambda: check_drift(exp)), "drift_certified")


def spectral_node(state: SuiteState) -> SuiteState:
    """Node 3: Round trips, semigroup law, contraction and mapping exponent"""
    logger.info("📍 NODE: spectral_node - Spectral calculus checks")
    exp = state["experiment"]
    return _record(state, guarded("spectral", anchors.SEMIGROUP_MAPPING, lambda: check_spectral(exp)), "spectral_checked")


def product_node(state: SuiteState) -> SuiteState:
    """Node 4: Truncated pointwise product"""
    logger.info("📍 NODE: product_node - Pointwise product checks")
    exp = state["experiment"]
    return _record(state, guarded("product", anchors.POINTWISE_PRODUCT, lambda: check_product(exp)), "product_checked")


def pde_node(state: SuiteState) -> SuiteState:
    """Node 5: Linear closed forms and the semilinear Picard solve"""
    logger.info("📍 NODE: pde_node - Solving the PDEs")
    exp = state["experiment"]
    verdicts = guarded("linear-pde", anchors.LINEAR_MILD, lambda: check_linear_pde(exp))
    verdicts += guarded("semilinear-pde", anchors.SEMILINEAR_MILD, lambda: check_semilinear_pde(exp))
    return _record(state, verdicts, "pde_solved")


def chain_rule_node(state: SuiteState) -> SuiteState:
    """Node 6: Chain rule representation and martingale orthogonality"""
    logger.info("📍 NODE: chain_rule_node - Occupation operator checks")
    exp = state["experiment"]
    return _record(state, chain_rule_checks(exp), "chain_rule_checked")


def consistency_node(state: SuiteState) -> SuiteState:
    """Node 7: Agreement with classical integrals and continuity of the extension"""
    logger.info("📍 NODE: consistency_node - Classical consistency checks")
    exp = state["experiment"]
    verdicts = guarded("consistency", anchors.CLASSICAL_CONSISTENCY, lambda: check_consistency(exp))
    return _record(state, verdicts, "consistency_checked")


def bsde_node(state: SuiteState) -> SuiteState:
    """Node 8: BSDE assembly, martingale tests and uniqueness check"""
    logger.info("📍 NODE: bsde_node - Verifying the BSDE solution")
    exp = state["experiment"]
    return _record(state, bsde_checks(exp), "bsde_verified")


def feynman_kac_node(state: SuiteState) -> SuiteState:
    """Node 9: Monte Carlo estimates at the evaluation points"""
    logger.info("📍 NODE: feynman_kac_node - Feynman-Kac estimates")
    exp = state["experiment"]
    verdicts = guarded("feynman-kac", anchors.FEYNMAN_KAC, lambda: check_feynman_kac(exp))
    return _record(state, verdicts, "feynman_kac_checked")


def haar_node(state: SuiteState) -> SuiteState:
    """Node 10: Haar projector and density approximants"""
    logger.info("📍 NODE: haar_node - Haar checks")
    exp = state["experiment"]
    return _record(state, guarded("haar", anchors.HAAR_BASIS, lambda: check_haar(exp)), "haar_checked")


def rejected_node(state: SuiteState) -> SuiteState:
    """Terminal branch for parameters outside the admissible region"""
    logger.info("📍 NODE: rejected_node - Parameters rejected, skipping numerics")
    state["current_step"] = "rejected"
    return state


def finalize_node(state: SuiteState) -> SuiteState:
    """Node 11: Overall verdict and report.json"""
    logger.info("📍 NODE: finalize_node - Writing the report")
    exp: Experiment = state["experiment"]
    verdicts = state["verdicts"]
    passed = bool(state["params_valid"]) and all(v.passed for v in verdicts)
    path = exp.store.write_report(
        {
            "subcommand": "full-suite",
            "config": exp.cfg.model_dump(mode="json"),
            "rejection": state["rejection"],
            "passed": passed,
            "verdicts": verdicts,
        }
    )
    failed = [v.name for v in verdicts if not v.passed]
    if failed:
        logger.warning(f"⚠️ {len(failed)} check(s) failed: {', '.join(failed)}")
    state["passed"] = passed
    state["report_path"] = str(path)
    state["artifacts"] = list(exp.store.written)
    state["current_step"] = "completed"
    return state


# === CONDITIONAL EDGES ===

def should_continue_after_validation(state: SuiteState) -> Literal["continue", "rejected"]:
    """Run the numerics only inside the admissible region"""
    if state["params_valid"]:
        logger.info("✅ Routing to the numerical checks (parameters admissible)")
        return "continue"
    logger.warning(f"⚠️ Routing to rejection ({state['rejection']})")
    return "rejected"


# === BUILD GRAPH ===

def create_suite_graph():
    """Create and compile the LangGraph workflow"""
    logger.info("🏗️ Building full-suite workflow")

    workflow = StateGraph(SuiteState)

    # Add nodes
    workflow.add_node("validate", validate_node)
    workflow.add_node("drift", drift_node)
    workflow.add_node("spectral", spectral_node)
    workflow.add_node("product", product_node)
    workflow.add_node("pde", pde_node)
    workflow.add_node("chain_rule", chain_rule_node)
    workflow.add_node("consistency", consistency_node)
    workflow.add_node("bsde", bsde_node)
    workflow.add_node("feynman_kac", feynman_kac_node)
    workflow.add_node("haar", haar_node)
    workflow.add_node("rejected", rejected_node)
    workflow.add_node("finalize", finalize_node)

    # Set entry point
    workflow.set_entry_point("validate")

    # Conditional edge after validation
    workflow.add_conditional_edges(
        "validate",
        should_continue_after_validation,
        {
            "continue": "drift",
            "rejected": "rejected",
        },
    )

    workflow.add_edge("drift", "spectral")
    workflow.add_edge("spectral", "product")
    workflow.add_edge("product", "pde")
    workflow.add_edge("pde", "chain_rule")
    workflow.add_edge("chain_rule", "consistency")
    workflow.add_edge("consistency", "bsde")
    workflow.add_edge("bsde", "feynman_kac")
    workflow.add_edge("feynman_kac", "haar")
    workflow.add_edge("haar", "finalize")
    workflow.add_edge("rejected", "finalize")
    workflow.add_edge("finalize", END)

    # Compile
    app = workflow.compile()

    logger.info("✅ Full-suite workflow compiled successfully")
    return app


# Create global graph instance
suite_graph = create_suite_graph()


def initial_state(config_path: str, experiment: Experiment) -> SuiteState:
    return SuiteState(
        config_path=config_path,
        experiment=experiment,
        params_valid=None,
        rejection=None,
        verdicts=[],
        artifacts=[],
        passed=None,
        report_path=None,
        current_step="start",
    )
