# Generated by Django 6.0.1 on 2026-10-17 09:12

import uuid

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='RunManifest',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('run_id', models.UUIDField(db_index=True, default=uuid.uuid4, help_text='Identifier shared by the rows of one run.')),
                ('phase', models.CharField(choices=[('STARTED', 'Started'), ('FINALIZED', 'Finalized'), ('FAILED', 'Failed')], help_text='Lifecycle point this row records.', max_length=10)),
                ('command', models.CharField(db_index=True, help_text='Management command that produced the run (analyze, simulate, ...).', max_length=20)),
                ('scenario_path', models.CharField(blank=True, help_text='Scenario file the run was read from.', max_length=500)),
                ('params', models.JSONField(default=dict, help_text='Resolved, validated parameters and integrator settings.')),
                ('seed', models.BigIntegerField(blank=True, help_text='Noise seed after command-line overrides.', null=True)),
                ('tool_version', models.CharField(max_length=40)),
                ('outputs', models.JSONField(blank=True, default=list, help_text='Paths of the files the run wrote.')),
                ('wall_clock', models.FloatField(blank=True, help_text='Seconds between the STARTED and FINALIZED rows.', null=True)),
                ('step_count', models.BigIntegerField(blank=True, help_text='Integration steps taken, summed over trajectories.', null=True)),
                ('extra', models.JSONField(blank=True, default=dict, help_text='Command-specific results, e.g. the detected dynamics class.')),
                ('timestamp', models.DateTimeField(auto_now_add=True, db_index=True)),
            ],
            options={
                'verbose_name': 'Run Manifest',
                'verbose_name_plural': 'Run Manifests',
                'ordering': ['-timestamp'],
                'indexes': [models.Index(fields=['run_id', 'phase'], name='cascade_run_phase_idx')],
            },
        ),
    ]
