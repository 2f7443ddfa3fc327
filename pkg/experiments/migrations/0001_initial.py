# Generated by Django 5.2.4 on 2026-10-19 10:12

import uuid

from django.db import migrations, models


class Migration(migrations.Migration):
    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="ExperimentRun",
            fields=[
                (
                    "id",
                    models.UUIDField(
                        default=uuid.uuid4,
                        editable=False,
                        primary_key=True,
                        serialize=False,
                    ),
                ),
                (
                    "command",
                    models.CharField(
                        choices=[
                            ("solve", "Solve"),
                            ("simulate", "Simulate"),
                            ("verify", "Verify"),
                            ("bench", "Bench"),
                        ],
                        max_length=16,
                    ),
                ),
                ("name", models.CharField(blank=True, max_length=120)),
                (
                    "config_hash",
                    models.CharField(blank=True, db_index=True, max_length=64),
                ),
                ("seed", models.BigIntegerField(blank=True, null=True)),
                (
                    "status",
                    models.CharField(
                        choices=[("succeeded", "Succeeded"), ("failed", "Failed")],
                        default="succeeded",
                        max_length=16,
                    ),
                ),
                ("artifact_dir", models.CharField(blank=True, max_length=500)),
                ("manifest", models.JSONField(blank=True, default=dict)),
                ("summary", models.TextField(blank=True)),
                ("started_at", models.DateTimeField(blank=True, null=True)),
                ("finished_at", models.DateTimeField(blank=True, null=True)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
            ],
            options={
                "ordering": ("-created_at",),
            },
        ),
    ]
