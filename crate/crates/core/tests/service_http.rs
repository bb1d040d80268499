mod common;

use std::sync::Arc;
use std::time::Duration;

use base64::Engine;
use common::service::{fallback_scenarios, pipeline, small_world, spawn};
use ipl::catalog::{DraftState, ListingDraft};
use ipl::gateway::{BlocklistSafety, GenerationGateway, ImageSafety, SafetyVerdict, ScriptedBackend, StreamLimits, StreamStatus};
use ipl::prompt::InstructionVariant;
use ipl::service::{parse_sse, ListingRequest, ListingResponse, RequestOptions, Stage, StreamTrailer};
use serde_json::json;

async fn generate(base: &str, req: &ListingRequest) -> (Vec<String>, StreamTrailer) {
    let body = tokio::time::timeout(Duration::from_secs(5), async {
        reqwest::Client::new()
            .post(format!("{base}/v1/listings:generate"))
            .json(req)
            .send()
            .await
            .unwrap()
            .text()
            .await
            .unwrap()
    })
    .await
    .expect("stream finished within 5 s");
    let (chunks, trailer) = parse_sse(&body);
    (chunks, trailer.unwrap_or_else(|| panic!("no trailer in {body}")))
}

#[tokio::test]
async fn fallback_ladder() {
    let world = small_world();
    let q = &world.queries[0];
    for s in fallback_scenarios(&world) {
        let drafts = s.pipeline.drafts.clone();
        let base = spawn(s.pipeline).await;
        let (chunks, trailer) = generate(&base, &ListingRequest::with_embedding(q.image_ref.clone(), q.embedding.clone())).await;
        assert_eq!(trailer.status, StreamStatus::Complete, "{}", s.name);
        assert_eq!(trailer.trace.variant, Some(s.variant), "{}", s.name);
        assert!(!chunks.is_empty());
        for stage in &trailer.trace.stages {
            let expect = s.fallback_stages.contains(&stage.stage);
            assert_eq!(stage.fallback_taken, expect, "{}: {:?}", s.name, stage);
        }
        let draft = drafts.get(&trailer.draft_id).expect("draft persisted");
        assert_eq!(draft.state, DraftState::Draft);
        assert_eq!(draft.generated_text, chunks.concat());
        assert_eq!(draft.context.variant, s.variant);
    }
}

#[tokio::test]
async fn full_round_trip_and_publish() {
    let world = small_world();
    let base = spawn(pipeline(&world)).await;
    let client = reqwest::Client::new();
    let q = &world.queries[1];
    let (chunks, trailer) = generate(&base, &ListingRequest::with_embedding(q.image_ref.clone(), q.embedding.clone())).await;
    assert_eq!(trailer.trace.variant, Some(InstructionVariant::ImageTemplateReference));
    let order: Vec<Stage> = trailer.trace.stages.iter().map(|s| s.stage).collect();
    assert_eq!(order, Stage::ORDER.to_vec());
    assert!(trailer.trace.reference_product.as_deref().unwrap().starts_with(&format!("spu{:05}", q.spu)));
    let text = chunks.concat();

    let draft: ListingDraft = client.get(format!("{base}/v1/drafts/{}", trailer.draft_id)).send().await.unwrap().json().await.unwrap();
    assert_eq!(draft.generated_text, text);

    let publish = |final_text: String| {
        let client = client.clone();
        let url = format!("{base}/v1/drafts/{}:publish", trailer.draft_id);
        async move { client.post(url).json(&json!({ "final_text": final_text })).send().await.unwrap() }
    };
    let metrics: serde_json::Value = publish(text.clone()).await.json().await.unwrap();
    assert_eq!(metrics["retained_ratio"], 1.0);
    assert!(metrics["quality_score"].as_f64().unwrap() > 0.0);
    assert_eq!(publish(text).await.status(), 409);

    let missing = client
        .post(format!("{base}/v1/drafts/nope:publish"))
        .json(&json!({"final_text": "x"}))
        .send()
        .await
        .unwrap();
    assert_eq!(missing.status(), 404);
    assert_eq!(client.get(format!("{base}/v1/drafts/nope")).send().await.unwrap().status(), 404);
    let bad_verb = client
        .post(format!("{base}/v1/drafts/{}:delete", trailer.draft_id))
        .json(&json!({"final_text": "x"}))
        .send()
        .await
        .unwrap();
    assert_eq!(bad_verb.status(), 404);
    let bad_action = client.post(format!("{base}/v1/listings:frobnicate")).json(&ListingRequest::with_embedding("x", q.embedding.clone())).send().await.unwrap();
    assert_eq!(bad_action.status(), 404);
}

#[tokio::test]
async fn non_streaming_mode_and_options() {
    let world = small_world();
    let base = spawn(pipeline(&world)).await;
    let client = reqwest::Client::new();
    let q = &world.queries[2];
    let post = |req: ListingRequest| {
        let client = client.clone();
        let url = format!("{base}/v1/listings:generate?stream=false");
        async move { client.post(url).json(&req).send().await.unwrap() }
    };
    let full: ListingResponse = post(ListingRequest::with_embedding(q.image_ref.clone(), q.embedding.clone())).await.json().await.unwrap();
    assert_eq!(full.status, StreamStatus::Complete);

    // Removing template chips changes the instruction.
    let template: Vec<String> = world.taxonomy.get_category(&q.category_id).unwrap().attribute_template.names()[..2].to_vec();
    let chips = RequestOptions { template: Some(template.clone()), ..RequestOptions::default() };
    let narrowed: ListingResponse = post(ListingRequest::with_embedding(q.image_ref.clone(), q.embedding.clone()).options(chips)).await.json().await.unwrap();
    assert_ne!(narrowed.trace.instruction, full.trace.instruction);
    assert!(narrowed.trace.instruction.contains(&template.join(" + ")));

    let no_ref = RequestOptions { use_reference: false, ..RequestOptions::default() };
    let r: ListingResponse = post(ListingRequest::with_embedding(q.image_ref.clone(), q.embedding.clone()).options(no_ref)).await.json().await.unwrap();
    assert_eq!(r.trace.variant, Some(InstructionVariant::ImageTemplate));

    let capped = RequestOptions { max_chars: Some(17), ..RequestOptions::default() };
    let r: ListingResponse = post(ListingRequest::with_embedding(q.image_ref.clone(), q.embedding.clone()).options(capped)).await.json().await.unwrap();
    assert_eq!((r.status, r.text.chars().count(), r.manual_edit), (StreamStatus::Truncated, 17, false));

    let mut bytes = ListingRequest::with_embedding(q.image_ref.clone(), vec![]);
    bytes.image_embedding = None;
    bytes.image_bytes = Some(base64::engine::general_purpose::STANDARD.encode(b"raw image bytes"));
    assert_eq!(post(bytes.clone()).await.status(), 200);

    bytes.image_bytes = None;
    assert_eq!(post(bytes.clone()).await.status(), 400);
    assert_eq!(post(ListingRequest::with_embedding("x", vec![1.0; 3])).await.status(), 400);
}

struct DenyAll;

impl ImageSafety for DenyAll {
    fn check_image(&self, _: &str, _: Option<&[f32]>) -> SafetyVerdict {
        SafetyVerdict::deny("non-compliant image")
    }
}

#[tokio::test]
async fn safety_gates() {
    let world = small_world();
    let q = &world.queries[3];
    let req = ListingRequest::with_embedding(q.image_ref.clone(), q.embedding.clone());

    let mut p = pipeline(&world);
    p.image_safety = Arc::new(DenyAll);
    let drafts = p.drafts.clone();
    let base = spawn(p).await;
    let resp = reqwest::Client::new().post(format!("{base}/v1/listings:generate")).json(&req).send().await.unwrap();
    assert_eq!(resp.status(), 422);
    assert!(drafts.is_empty(), "no draft for a rejected image");

    let mut p = pipeline(&world);
    let backend = ScriptedBackend::new(["Barely used, ", "add my wechat ", "for cheaper"]);
    p.gateway = GenerationGateway::new(Arc::new(backend), Arc::new(BlocklistSafety::new(["(?i)wechat"]).unwrap()), StreamLimits::default());
    let drafts = p.drafts.clone();
    let base = spawn(p).await;
    let (chunks, trailer) = generate(&base, &req).await;
    assert_eq!(chunks.concat(), "Barely used, ");
    assert_eq!((trailer.status, trailer.manual_edit), (StreamStatus::SafetyHalted, true));
    let draft = drafts.get(&trailer.draft_id).unwrap();
    assert_eq!((draft.state, draft.generation_status), (DraftState::Draft, Some(StreamStatus::SafetyHalted)));
}

#[tokio::test]
async fn healthz_reports_counts() {
    let world = small_world();
    let base = spawn(pipeline(&world)).await;
    let body: serde_json::Value = reqwest::get(format!("{base}/healthz")).await.unwrap().json().await.unwrap();
    assert_eq!(body["products"], world.products.len());
    assert_eq!(body["indexed"], world.products.len());
}
