use flexloc::agents::{run_agent, AgentKind, FlexFlConfig};
use flexloc::demo::{self, BUGGY_METHOD};
use flexloc::llm::{Gateway, ReplayBackend, ReplayItem};
use flexloc::toolbox::CORRECTIVE_PROMPT;

#[test]
fn replay_reaches_the_buggy_method() {
    let run = demo::run().unwrap();
    let o = &run.output;
    let sr = &o.stage1.sr_runs[0];
    assert_eq!(
        sr.predictions.entries[0].fqn,
        "org.joda.time.tz.FixedDateTimeZone.getOffsetFromLocal(long)"
    );
    // The hallucinated third name is repaired onto a real method.
    assert!(sr.summary_names[2].contains("DefaultNameProvider"));
    assert!(sr.predictions.contains(BUGGY_METHOD));
    assert_eq!(o.stage1.candidates.len(), 20);
    assert_eq!(
        o.stage1.candidates.entries[0].fqn,
        "org.joda.time.DateTime.DateTime(long,DateTimeZone)"
    );
    assert_eq!(o.stage1.candidates.entries[17].fqn, BUGGY_METHOD);
    assert_eq!(o.final_list().entries[0].fqn, BUGGY_METHOD);
    assert!(o.stage2.lr_runs[0].off_list.is_empty());
    assert_eq!(run.report.top_n[&1], 1);
    print!("{}", demo::walkthrough(&run));
}

#[test]
fn scripts_are_fully_consumed() {
    let d = demo::inputs();
    let sr = Gateway::new(d.sr_script);
    let lr = Gateway::new(d.lr_script);
    flexloc::agents::run_flexfl(&d.bug, &d.index, None, &d.external, &sr, &lr, &FlexFlConfig::default()).unwrap();
    sr.backend().finish().unwrap();
    lr.backend().finish().unwrap();
    assert_eq!(sr.calls(), 7);
    assert_eq!(lr.calls(), 5);
}

#[test]
fn unknown_functions_get_the_corrective_prompt() {
    let d = demo::inputs();
    let script = ReplayBackend::from_texts(
        "s",
        [
            "thinking",
            "bogus_fn(1)",
            "no call here",
            "exit()",
            "Top_1: DateTimeZone.getOffsetFromLocal",
        ],
    );
    let gw = Gateway::new(script);
    let t = run_agent(AgentKind::Sr, &d.bug, &d.index, None, &gw, &FlexFlConfig::default()).unwrap();
    assert_eq!(t.calls.len(), 3);
    assert_eq!(t.calls[0].result.text, CORRECTIVE_PROMPT);
    assert_eq!(t.calls[1].result.text, CORRECTIVE_PROMPT);
    assert!(t.messages.iter().any(|m| m.content.starts_with(CORRECTIVE_PROMPT)));
    assert_eq!(t.predictions.entries[0].fqn, BUGGY_METHOD);
}

#[test]
fn immediate_exit_and_off_list_predictions() {
    let d = demo::inputs();
    let candidates = flexloc::ranking::RankedList::from_fqns("candidates", ["org.joda.time.DateTime.toString()"]);
    let script = ReplayBackend::from_texts(
        "s",
        [
            "r",
            "exit()",
            "Top_1: org.joda.time.DateTimeZone.getOffsetFromLocal(long)",
        ],
    );
    let gw = Gateway::new(script);
    let t = run_agent(
        AgentKind::Lr,
        &d.bug,
        &d.index,
        Some(&candidates),
        &gw,
        &FlexFlConfig::default(),
    )
    .unwrap();
    assert_eq!(t.gateway_calls, 3);
    assert_eq!(t.off_list, vec![BUGGY_METHOD.to_string()]);
}

#[test]
fn overflow_lowers_the_cap_once() {
    let d = demo::inputs();
    let items = vec![
        ReplayItem::Text("r".into()),
        ReplayItem::error("context_length_exceeded"),
        ReplayItem::Text("r".into()),
        ReplayItem::Text("exit()".into()),
        ReplayItem::Text("Top_1: org.joda.time.DateTimeZone.getOffsetFromLocal(long)".into()),
    ];
    let gw = Gateway::new(ReplayBackend::new("s", items));
    let t = run_agent(AgentKind::Sr, &d.bug, &d.index, None, &gw, &FlexFlConfig::default()).unwrap();
    assert_eq!((t.reruns, t.max_used, t.overflow), (1, 9, false));
    assert_eq!(t.gateway_calls, 3);
    gw.backend().finish().unwrap();
}
