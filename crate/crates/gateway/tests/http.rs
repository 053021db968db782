mod common;

use picdna_core::codec::{bmp, decode_layers, encode_layers};
use picdna_core::costs::{CostInputs, CostReport};
use picdna_core::reconstruct::{decode_image, DecodeParams};
use picdna_gateway::Session;
use reqwest::StatusCode;
use serde_json::{json, Value};

use common::{clean_params, images, pool, spawn, LEVELS, QUALITY};

async fn server() -> (String, reqwest::Client) {
    let base = spawn(Session::new(pool(), clean_params()).unwrap()).await;
    (base, reqwest::Client::new())
}

async fn post_decode(client: &reqwest::Client, base: &str, id: &str, body: Value) -> (StatusCode, Value) {
    let r = client
        .post(format!("{base}/api/images/{id}/decode"))
        .json(&body)
        .send()
        .await
        .unwrap();
    let status = r.status();
    (status, r.json().await.unwrap())
}

async fn get_json(client: &reqwest::Client, url: String) -> (StatusCode, Value) {
    let r = client.get(url).send().await.unwrap();
    let status = r.status();
    (status, r.json().await.unwrap())
}

fn clean_body(level: usize) -> Value {
    json!({
        "targetLevel": level,
        "coverage": 2.0,
        "rates": { "sub": 0.0, "ins": 0.0, "del": 0.0 },
        "seed": 4,
        "mode": "exact",
    })
}

#[tokio::test]
async fn gallery_lists_every_image_with_its_thumbnail() {
    let (base, client) = server().await;
    let (status, list) = get_json(&client, format!("{base}/api/images")).await;
    assert_eq!(status, StatusCode::OK);
    let entries = list.as_array().unwrap();
    assert_eq!(entries.len(), 3);
    for (i, (e, img)) in entries.iter().zip(images()).enumerate() {
        assert_eq!(e["imageId"], i);
        assert_eq!(e["primerPairId"], i);
        assert_eq!(e["primers"]["left"].as_str().unwrap().len(), 20);
        let url = e["thumbnailUrl"].as_str().unwrap();
        assert_eq!(url, format!("/api/images/{i}/thumbnail.bmp"));

        let r = client.get(format!("{base}{url}")).send().await.unwrap();
        assert_eq!(r.status(), StatusCode::OK);
        assert_eq!(r.headers()["content-type"], "image/bmp");
        let expect = decode_layers(&encode_layers(&img, LEVELS, QUALITY).unwrap().layers, 0).unwrap();
        assert_eq!(r.bytes().await.unwrap().as_ref(), bmp::encode(&expect).as_slice());
    }
}

#[tokio::test]
async fn second_decode_only_sequences_new_layers() {
    let (base, client) = server().await;
    let (status, first) = post_decode(&client, &base, "1", clean_body(1)).await;
    assert_eq!(status, StatusCode::OK, "{first}");
    let layers = |v: &Value| -> Vec<u64> {
        v["layerCosts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| c["layer"].as_u64().unwrap())
            .collect()
    };
    assert_eq!(layers(&first), [0, 1]);
    let (status, second) = post_decode(&client, &base, "1", clean_body(3)).await;
    assert_eq!(status, StatusCode::OK, "{second}");
    assert_eq!(layers(&second), [2, 3]);
    assert!(second["cumulativeReadCost"].as_f64().unwrap() > first["cumulativeReadCost"].as_f64().unwrap());

    // same arithmetic as the core cost model
    let p = pool();
    let img = &images()[1];
    let pixels = (img.width() * img.height()) as u64;
    let (inputs, _) = CostInputs::from_manifest(&p.manifest, LEVELS, &[2.0; LEVELS], pixels).unwrap();
    let report = CostReport::compute(&inputs, 1).unwrap();
    assert_eq!(second["gains"]["gpd"].as_f64().unwrap(), report.gpd[3]);
    assert_eq!(second["gains"]["gra"].as_f64().unwrap(), report.gra[3]);
    assert_eq!(second["costReport"], serde_json::to_value(&report).unwrap());

    // the lossy full decode is the reference, so it scores as identical
    assert!(first["psnr"].as_f64().unwrap() > 10.0);
    assert!(second["psnr"].is_null());

    let (one_shot, step) = decode_image(&p, &p.registry.image_pairs[1], 3, &clean_params()).unwrap();
    assert_eq!(second["cumulativeNucleotides"].as_u64().unwrap(), step.cumulative_nucleotides);
    let url = second["imageUrl"].as_str().unwrap();
    assert_eq!(url, "/api/images/1/image.bmp?level=3");
    let bytes = client.get(format!("{base}{url}")).send().await.unwrap().bytes().await.unwrap();
    assert_eq!(bytes.as_ref(), bmp::encode(&one_shot).as_slice());

    // earlier levels stay available from the cache
    let r = client.get(format!("{base}/api/images/1/image.bmp?level=0")).send().await.unwrap();
    assert_eq!(r.status(), StatusCode::OK);
    let r = client.get(format!("{base}/api/images/1/image.bmp")).send().await.unwrap();
    assert_eq!(r.bytes().await.unwrap().as_ref(), bmp::encode(&one_shot).as_slice());
}

#[tokio::test]
async fn failed_layer_is_reported_and_recovered_layers_are_kept() {
    let (base, client) = server().await;
    assert_eq!(post_decode(&client, &base, "0", clean_body(1)).await.0, StatusCode::OK);

    let mut starved = clean_body(3);
    starved["coverage"] = json!(0.0);
    starved["mode"] = json!("poisson");
    let (status, err) = post_decode(&client, &base, "0", starved).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["code"], "layer_failed");
    assert_eq!(err["layer"], 2);
    assert_eq!(err["trace"][0]["readsSeen"], 0);
    assert!(err["message"].as_str().unwrap().contains("layer 2"));

    let (status, ok) = post_decode(&client, &base, "0", clean_body(3)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ok["layerCosts"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn errors_carry_code_and_message() {
    let (base, client) = server().await;
    for id in ["7", "x"] {
        let (status, err) = post_decode(&client, &base, id, clean_body(0)).await;
        assert_eq!(status, StatusCode::NOT_FOUND);
        assert_eq!(err["code"], "unknown_image");
        assert!(err["message"].is_string());
    }
    let (status, err) = get_json(&client, format!("{base}/api/images/9/thumbnail.bmp")).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_image")));

    let (status, err) = post_decode(&client, &base, "0", clean_body(LEVELS)).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::BAD_REQUEST, Some("invalid_parameters")));

    let (status, err) = post_decode(&client, &base, "0", json!({ "target": 1 })).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::BAD_REQUEST, Some("invalid_parameters")));

    let mut noisy = clean_body(0);
    noisy["rates"]["sub"] = json!(0.5);
    let (status, _) = post_decode(&client, &base, "0", noisy).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, err) = get_json(&client, format!("{base}/api/images/2/image.bmp?level=1")).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::NOT_FOUND, Some("not_decoded")));

    let (status, err) = get_json(&client, format!("{base}/api/nothing")).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::NOT_FOUND, Some("not_found")));
}

#[tokio::test]
async fn cost_report_matches_the_cost_model() {
    let (base, client) = server().await;
    let p = pool();
    for (id, img) in images().iter().enumerate() {
        let (status, got) = get_json(&client, format!("{base}/api/cost-report?image={id}")).await;
        assert_eq!(status, StatusCode::OK);
        let pixels = (img.width() * img.height()) as u64;
        let (inputs, _) = CostInputs::from_manifest(&p.manifest, LEVELS, &[2.0; LEVELS], pixels).unwrap();
        assert_eq!(got, serde_json::to_value(CostReport::compute(&inputs, id).unwrap()).unwrap());
        assert_eq!(got["gpd"][LEVELS - 1], 1.0);
    }
    let (_, default) = get_json(&client, format!("{base}/api/cost-report")).await;
    assert_eq!(default["image"], 0);
    let (status, _) = get_json(&client, format!("{base}/api/cost-report?image=5")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn cross_origin_requests_are_allowed() {
    let (base, client) = server().await;
    let r = client
        .get(format!("{base}/api/images"))
        .header("origin", "http://localhost:5173")
        .send()
        .await
        .unwrap();
    assert_eq!(r.headers()["access-control-allow-origin"], "*");
    let pre = client
        .request(reqwest::Method::OPTIONS, format!("{base}/api/images/0/decode"))
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .header("access-control-request-headers", "content-type")
        .send()
        .await
        .unwrap();
    assert!(pre.status().is_success());
    assert!(pre.headers().contains_key("access-control-allow-methods"));
}

#[tokio::test]
async fn concurrent_decodes_of_different_images() {
    let (base, client) = server().await;
    let (a, b, c) = tokio::join!(
        post_decode(&client, &base, "0", clean_body(3)),
        post_decode(&client, &base, "1", clean_body(2)),
        post_decode(&client, &base, "2", clean_body(3)),
    );
    for (status, v) in [a, b, c] {
        assert_eq!(status, StatusCode::OK, "{v}");
    }
}

#[tokio::test]
async fn request_fields_default_to_the_session_channel() {
    let (base, client) = server().await;
    let (status, v) = post_decode(&client, &base, "2", json!({ "targetLevel": 0 })).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    let p = pool();
    let (_, step) = decode_image(&p, &p.registry.image_pairs[2], 0, &clean_params()).unwrap();
    assert_eq!(v["layerCosts"][0]["reads"].as_u64().unwrap() as usize, step.layer_costs[0].reads);
    assert_ne!(clean_params(), DecodeParams::default());
}
