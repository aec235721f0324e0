# Generated by Django 5.2.8 on 2026-10-18 10:00

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('mode', models.CharField(max_length=30)),
                ('seed', models.CharField(max_length=20)),
                ('config_hash', models.CharField(max_length=64)),
                ('exit_code', models.SmallIntegerField()),
                ('output_dir', models.CharField(blank=True, max_length=500)),
                ('summary', models.JSONField(blank=True, null=True)),
                ('timestamp', models.DateTimeField(auto_now_add=True)),
            ],
        ),
    ]
