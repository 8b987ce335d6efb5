use super::*;

fn plan(n: usize, nt: usize, cells: &[(usize, usize, usize, f64)]) -> AssignmentPlan<f64> {
    AssignmentPlan::from_triplets(n, nt, cells).unwrap()
}

fn allow_all(inst: &mut PlanningInstance<f64>, l: f64) {
    for i in 0..inst.n_locations {
        for j in 0..inst.n_locations {
            if i != j {
                inst.assign_cost[i][j] = AssignCost::Allowed(l);
            }
        }
    }
}

#[test]
fn zero_plans_cost_nothing() {
    let inst = PlanningInstance::<f64>::blank(3, 4);
    let c = evaluate_objective(&inst, &InvestmentPlan::zeros(3), &plan(3, 4, &[])).unwrap();
    assert_eq!((c.investment, c.assignment, c.total), (0.0, 0.0, 0.0));
}

#[test]
fn investment_formula() {
    let mut inst = PlanningInstance::<f64>::blank(1, 1);
    inst.location_cost = vec![100.0];
    let inv = InvestmentPlan { capacity: vec![2.0] };
    let c = evaluate_objective(&inst, &inv, &plan(1, 1, &[])).unwrap();
    assert_eq!(c.investment, 1200.0);
    assert_eq!(c.total, 1200.0);
}

#[test]
fn assignment_is_recurrence_weighted() {
    let mut inst = PlanningInstance::<f64>::blank(2, 1);
    inst.recurrence = vec![520.0];
    inst.assign_cost[0][1] = AssignCost::Allowed(0.4);
    let c = evaluate_objective(&inst, &InvestmentPlan::zeros(2), &plan(2, 1, &[(0, 0, 1, 3.0)])).unwrap();
    assert!((c.assignment - 624.0).abs() < 1e-9);
    assert_eq!(c.investment, 0.0);
}

#[test]
fn structural_zeros_are_errors() {
    let inst = PlanningInstance::<f64>::blank(2, 1);
    let forbidden = evaluate_objective(&inst, &InvestmentPlan::zeros(2), &plan(2, 1, &[(0, 0, 1, 1.0)]));
    assert!(matches!(forbidden, Err(ModelError::StructuralZero { kind: "forbidden", .. })));
    let diagonal = evaluate_objective(&inst, &InvestmentPlan::zeros(2), &plan(2, 1, &[(0, 1, 1, 1.0)]));
    assert!(matches!(diagonal, Err(ModelError::StructuralZero { kind: "diagonal", .. })));
    let short = evaluate_objective(&inst, &InvestmentPlan::zeros(3), &plan(2, 1, &[]));
    assert!(matches!(short, Err(ModelError::Dimension { .. })));
}

#[test]
fn net_demand_without_assignments_is_alpha_flow() {
    let mut inst = PlanningInstance::<f64>::blank(2, 3);
    inst.flow = vec![vec![10.0, 4.0], vec![0.0, 7.0], vec![3.0, 1.0]];
    inst.alpha = vec![vec![0.1, 0.5], vec![0.2, 1.0], vec![0.0, 0.25]];
    let z = plan(2, 3, &[]);
    for t in 0..3 {
        for i in 0..2 {
            assert_eq!(net_charging_demand(&inst, &z, i, t), inst.alpha[t][i] * inst.flow[t][i]);
        }
    }
}

#[test]
fn delayed_inflow() {
    // 5 vehicles leave location 2 for location 1 in slot 3 and need one slot
    let mut inst = PlanningInstance::<f64>::blank(2, 4);
    allow_all(&mut inst, 1.0);
    inst.delay[1][0] = 1;
    let z = plan(2, 4, &[(2, 1, 0, 5.0)]);
    assert_eq!(net_charging_demand(&inst, &z, 0, 3), 5.0);
    assert_eq!(net_charging_demand(&inst, &z, 0, 2), 0.0);
    assert_eq!(net_charging_demand(&inst, &z, 1, 2), -5.0);
}

#[test]
fn delayed_inflow_wraps_around_the_week() {
    // departure in the last slot, two slots on the road: arrives in slot 2
    let mut inst = PlanningInstance::<f64>::blank(2, 4);
    allow_all(&mut inst, 1.0);
    inst.delay[1][0] = 2;
    let z = plan(2, 4, &[(3, 1, 0, 5.0)]);
    assert_eq!(net_charging_demand(&inst, &z, 0, 1), 5.0);
    let matrix = net_demand_matrix(&inst, &z);
    for t in 0..4 {
        for i in 0..2 {
            assert_eq!(matrix[t][i], net_charging_demand(&inst, &z, i, t));
        }
    }
}

#[test]
fn empty_system_is_feasible() {
    let inst = PlanningInstance::<f64>::blank(2, 2);
    let r = check_feasibility(&inst, &InvestmentPlan::zeros(2), &plan(2, 2, &[]), 0.0).unwrap();
    assert!(r.feasible);
    assert!(r.families().iter().all(|(_, res)| res.violation == 0.0));
}

#[test]
fn capacity_bound_violation() {
    let mut inst = PlanningInstance::<f64>::blank(2, 1);
    inst.capacity_max = vec![50.0, 50.0];
    let inv = InvestmentPlan { capacity: vec![0.0, 51.0] };
    let r = check_feasibility(&inst, &inv, &plan(2, 1, &[]), 1e-9).unwrap();
    assert!(!r.feasible);
    assert_eq!(r.capacity_bounds.violation, 1.0);
    assert_eq!(r.capacity_bounds.i, Some(1));
}

#[test]
fn flow_conservation_violation() {
    let mut inst = PlanningInstance::<f64>::blank(3, 2);
    allow_all(&mut inst, 1.0);
    inst.flow[1][0] = 4.0;
    let z = plan(3, 2, &[(1, 0, 1, 2.5), (1, 0, 2, 2.0)]);
    let inv = InvestmentPlan {
        capacity: required_capacity(&inst, &z),
    };
    let r = check_feasibility(&inst, &inv, &z, 1e-9).unwrap();
    assert!(!r.feasible);
    assert_eq!(r.flow_conservation.violation, 0.5);
    assert_eq!((r.flow_conservation.i, r.flow_conservation.t), (Some(0), Some(1)));
}

#[test]
fn capacity_satisfaction_and_budget() {
    let mut inst = PlanningInstance::<f64>::blank(1, 2);
    inst.flow = vec![vec![2.0], vec![4.0]];
    inst.beta = 10.0;
    inst.budget = 10_000.0;
    let inv = InvestmentPlan { capacity: vec![30.0] };
    let r = check_feasibility(&inst, &inv, &plan(1, 2, &[]), 0.0).unwrap();
    assert_eq!(r.capacity_satisfaction.violation, 10.0);
    assert_eq!(r.capacity_satisfaction.t, Some(1));
    assert_eq!(r.budget.violation, 5000.0);
}

#[test]
fn instance_json_round_trip_and_version() {
    let mut inst = PlanningInstance::<f64>::blank(2, 2);
    inst.assign_cost[0][1] = AssignCost::Allowed(0.4);
    let text = inst.to_json().unwrap();
    assert!(text.contains(INSTANCE_VERSION));
    assert!(text.contains("\"forbidden\""));
    assert_eq!(PlanningInstance::<f64>::from_json(&text).unwrap(), inst);
    let wrong = text.replace(INSTANCE_VERSION, "charge-plan-instance/0");
    assert!(PlanningInstance::<f64>::from_json(&wrong).is_err());
}

#[test]
fn validation_rejects_bad_data() {
    let ok = PlanningInstance::<f64>::blank(2, 3);
    assert!(ok.validate().is_ok());
    let mut a = ok.clone();
    a.alpha[0][1] = 1.5;
    assert!(a.validate().is_err());
    let mut d = ok.clone();
    d.delay[0][1] = 3;
    assert!(d.validate().is_err());
    let mut g = ok.clone();
    g.assign_cost[1][1] = AssignCost::Allowed(1.0);
    assert!(g.validate().is_err());
    let mut f = ok.clone();
    f.flow[2][0] = -1.0;
    assert!(f.validate().is_err());
    let mut s = ok;
    s.recurrence.pop();
    assert!(s.validate().is_err());
}

#[test]
fn range_reapplied_from_distances() {
    let mut inst = PlanningInstance::<f64>::blank(2, 1);
    inst.distance = Some(vec![vec![0.0, 2.0], vec![3.5, 0.0]]);
    inst.assign_price = Some(0.2);
    let r = inst.with_range(3.0).unwrap();
    assert_eq!(r.assign_cost[0][1], AssignCost::Allowed(0.4));
    assert_eq!(r.assign_cost[1][0], AssignCost::Forbidden);
    assert_eq!(r.range_limit, 3.0);
    assert!(PlanningInstance::<f64>::blank(2, 1).with_range(3.0).is_err());
}

#[test]
fn single_precision_evaluation() {
    let mut inst = PlanningInstance::<f64>::blank(2, 1);
    inst.recurrence = vec![520.0];
    inst.assign_cost[0][1] = AssignCost::Allowed(0.5);
    let inst32: PlanningInstance<f32> = inst.cast();
    let z = AssignmentPlan::<f32>::from_triplets(2, 1, &[(0, 0, 1, 3.0)]).unwrap();
    let c = evaluate_objective(&inst32, &InvestmentPlan { capacity: vec![1.0f32, 0.0] }, &z).unwrap();
    assert_eq!(c.assignment, 780.0f32);
    assert_eq!(c.investment, 500.0f32);
}
